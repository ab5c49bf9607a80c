"""Named random substreams.

Each simulation draw site owns a stream keyed by ``(master seed, label)``.
The label is hashed to a fixed 64-bit word, and the pair seeds a Philox
counter-based generator, so adding a new label never shifts the draws of
an existing one.
"""

from __future__ import annotations

import hashlib

import numpy as np

AGENTS = "agents"
RISK = "risk"
ENFORCEMENT = "enforcement"
SHUFFLE = "shuffle"
FLAGS = "regime-flags"


def label_key(label: str) -> int:
    return int.from_bytes(hashlib.sha256(label.encode()).digest()[:8], "little")


def substream(seed: int, label: str) -> np.random.Generator:
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, label_key(label)])
    return np.random.Generator(np.random.Philox(ss))
