"""Buyer and seller populations.

Populations are stored column-wise (one numpy array per attribute) because
the market evaluates every buyer against every seller each period.  Single
agents can be pulled out as :class:`Buyer` / :class:`Seller` records.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .calibration import BuyerCoeffs, SellerCoeffs, sample_alphas
from .hexgrid import Grid


class InvalidStateError(RuntimeError):
    pass


@dataclass(frozen=True)
class Hotspot:
    """Exponential density kernel centred on a cell."""

    cell: int
    intensity: float
    decay: float  # per km

    def __post_init__(self):
        if not (self.intensity > 0 and self.decay > 0):
            raise ValueError(f"hotspot intensity and decay must be > 0: {self}")


def synth_density(
    grid: Grid, hotspots: Iterable[Hotspot], floor: float = 0.0
) -> np.ndarray:
    """Per-cell density ``sum_h intensity_h * exp(-decay_h * dist(c, h))``.

    Values below ``floor`` are set to zero, which leaves empty periphery cells.
    """
    density = np.zeros(len(grid.cells))
    xy = grid.centroids
    for h in hotspots:
        d = np.hypot(*(xy - xy[h.cell]).T)
        density += h.intensity * np.exp(-h.decay * d)
    if floor > 0:
        density[density < floor] = 0.0
    return density


@dataclass(frozen=True)
class VolumeParams:
    """Seller package volume: log-uniform on ``[pkg_min, pkg_max]`` times a level factor."""

    pkg_min: float = 0.5
    pkg_max: float = 20.0
    level_step: float = 0.25  # volume factor is 1 + level_step * (level - 1)


def default_budget_bands(base_budget: float = 1e4, n_levels: int = 5, top: float = 1e7):
    """Disjoint ascending log-scale bands; level 1 starts at ``base_budget``, level 5 at ``top``."""
    step = (np.log10(top) - np.log10(base_budget)) / (n_levels - 1)
    lo = np.log10(base_budget)
    return tuple((10 ** (lo + step * i), 10 ** (lo + step * (i + 1))) for i in range(n_levels))


@dataclass(frozen=True)
class Buyer:
    id: int
    cell_id: int
    z: int
    x_stock: float
    m_budget: float
    alpha: float


@dataclass(frozen=True)
class Seller:
    id: int
    cell_id: int
    s: int
    x_pkg: float
    r_class: int
    e_state: int
    alpha: float
    last_price: float = 0.0
    consent: bool = True
    on_exchange: bool = False


@dataclass
class Buyers:
    cell_id: np.ndarray
    z: np.ndarray
    x_stock: np.ndarray
    m_budget: np.ndarray
    alpha: np.ndarray

    def __len__(self) -> int:
        return len(self.cell_id)

    def __getitem__(self, i: int) -> Buyer:
        return Buyer(
            int(i), int(self.cell_id[i]), int(self.z[i]), float(self.x_stock[i]),
            float(self.m_budget[i]), float(self.alpha[i]),
        )

    def copy(self) -> "Buyers":
        return Buyers(*(np.array(getattr(self, f)) for f in self.__dataclass_fields__))


@dataclass
class Sellers:
    cell_id: np.ndarray
    s: np.ndarray
    x_pkg: np.ndarray
    alpha: np.ndarray
    r_class: np.ndarray | None = None
    e_state: np.ndarray | None = None
    last_price: np.ndarray | None = None
    consent: np.ndarray | None = None
    on_exchange: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.cell_id)
        if self.r_class is None:
            self.r_class = np.zeros(n, dtype=int)  # 0 = not yet assigned
        if self.e_state is None:
            self.e_state = np.ones(n, dtype=int)
        if self.last_price is None:
            self.last_price = np.zeros(n)
        if self.consent is None:
            self.consent = np.ones(n, dtype=bool)
        if self.on_exchange is None:
            self.on_exchange = np.zeros(n, dtype=bool)

    def __len__(self) -> int:
        return len(self.cell_id)

    def __getitem__(self, j: int) -> Seller:
        return Seller(
            int(j), int(self.cell_id[j]), int(self.s[j]), float(self.x_pkg[j]),
            int(self.r_class[j]), int(self.e_state[j]), float(self.alpha[j]),
            float(self.last_price[j]), bool(self.consent[j]), bool(self.on_exchange[j]),
        )

    def copy(self) -> "Sellers":
        return Sellers(*(np.array(getattr(self, f)) for f in self.__dataclass_fields__))


def _slots(tiers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One (cell, level) slot per level 1..tier of each cell, in cell-id order."""
    cells = np.repeat(np.arange(len(tiers)), tiers)
    levels = np.concatenate([np.arange(1, t + 1) for t in tiers]) if tiers.sum() else np.zeros(0, int)
    return cells.astype(int), levels.astype(int)


def _log_uniform(lo, hi, size, rng):
    return np.exp(rng.uniform(np.log(lo), np.log(hi), size))


def seed_agents(
    grid: Grid,
    buyer_coeffs: BuyerCoeffs,
    seller_coeffs: SellerCoeffs,
    volume_params: VolumeParams,
    budget_bands: Sequence[tuple[float, float]],
    rng: np.random.Generator,
    initial_stock: float = 0.0,
) -> tuple[Buyers, Sellers]:
    """Populate the grid: a tier-``k`` cell hosts one agent of each level ``1..k``."""
    bt, st = grid.buyer_tiers, grid.seller_tiers
    if bt.min(initial=0) < 0 or st.min(initial=0) < 0 or bt.max(initial=0) > 5 or st.max(initial=0) > 5:
        raise InvalidStateError("cell tiers must be assigned in 0..5 before seeding agents")
    if len(budget_bands) < max(bt.max(initial=0), 1):
        raise InvalidStateError("need one budget band per buyer level")

    b_cells, b_levels = _slots(bt)
    s_cells, s_levels = _slots(st)

    # draw order is part of the reproducibility contract
    b_alpha = sample_alphas(buyer_coeffs.mu_alpha, buyer_coeffs.sigma_alpha, len(b_cells), rng)
    bands = np.asarray(budget_bands, dtype=float)
    b_budget = _log_uniform(bands[b_levels - 1, 0], bands[b_levels - 1, 1], len(b_cells), rng)
    s_alpha = sample_alphas(seller_coeffs.mu_alpha, seller_coeffs.sigma_alpha, len(s_cells), rng)
    vp = volume_params
    factor = 1.0 + vp.level_step * (s_levels - 1)
    s_pkg = _log_uniform(vp.pkg_min, vp.pkg_max, len(s_cells), rng) * factor

    buyers = Buyers(
        cell_id=b_cells, z=b_levels, x_stock=np.full(len(b_cells), float(initial_stock)),
        m_budget=b_budget, alpha=b_alpha,
    )
    sellers = Sellers(cell_id=s_cells, s=s_levels, x_pkg=s_pkg, alpha=s_alpha)
    return buyers, sellers


def write_agents_csv(path: str | Path, buyers: Buyers, sellers: Sellers) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "id", "cell_id", "level", "alpha", "budget_or_pkg", "x_stock"])
        for i in range(len(buyers)):
            w.writerow(["buyer", i, buyers.cell_id[i], buyers.z[i], repr(float(buyers.alpha[i])),
                        repr(float(buyers.m_budget[i])), repr(float(buyers.x_stock[i]))])
        for j in range(len(sellers)):
            w.writerow(["seller", j, sellers.cell_id[j], sellers.s[j], repr(float(sellers.alpha[j])),
                        repr(float(sellers.x_pkg[j])), ""])
