"""Risk classes and enforcement intensity via three-category ordered logits.

Risk ``R`` is drawn once per seller from its package volume.  Enforcement
``E`` is redrawn on a schedule from the volume traded in the seller's cell
and its adjacent ring over a trailing window.  Both use the score
``z = ln(1 + x / scale)`` with data-driven scale and cut points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.special import expit

PERCENTILES = (33.0, 67.0)
CUT_EPS = 1e-6  # half-width used when both cut points coincide


class CalibrationError(ValueError):
    pass


class InvalidParameterError(ValueError):
    pass


@dataclass(frozen=True)
class RiskParams:
    gamma_r: float
    scale_r: float
    cuts_r: tuple[float, float]

    def __post_init__(self):
        _check(self.gamma_r, self.cuts_r)
        if not self.scale_r > 0:
            raise InvalidParameterError(f"scale_r must be > 0, got {self.scale_r}")


@dataclass(frozen=True)
class EnforceParams:
    gamma_e: float = 1.0
    window: int = 1
    t_e: int = 1
    scale_e: float | None = None  # fixed override; otherwise set at first active update
    cuts_e: tuple[float, float] | None = None  # fixed override; otherwise recalibrated

    def __post_init__(self):
        if not self.gamma_e > 0:
            raise InvalidParameterError(f"gamma_e must be > 0, got {self.gamma_e}")
        if self.window < 1 or self.t_e < 1:
            raise InvalidParameterError("window and t_e must be >= 1")
        if self.cuts_e is not None:
            _check(self.gamma_e, self.cuts_e)


def _check(gamma: float, cuts) -> None:
    if not gamma > 0:
        raise InvalidParameterError(f"slope must be > 0, got {gamma}")
    c1, c2 = cuts
    if not c1 < c2:
        raise InvalidParameterError(f"cut points must be strictly ascending, got {cuts}")


def z_transform(x, scale: float):
    return np.log1p(np.asarray(x, dtype=float) / scale)


def ordered_logit_probs(z, gamma: float, cuts: tuple[float, float]) -> np.ndarray:
    """Probabilities of classes 1, 2, 3; last axis has length 3."""
    _check(gamma, cuts)
    c1, c2 = cuts
    z = np.asarray(z, dtype=float)
    upper2 = expit(gamma * (z - c1))  # P(class >= 2)
    p3 = expit(gamma * (z - c2))
    p2 = upper2 - p3
    p1 = 1.0 - upper2
    return np.stack([p1, p2, p3], axis=-1)


def percentile_cuts(z: np.ndarray) -> tuple[float, float]:
    """(P33, P67) with linear interpolation between order statistics."""
    lo, hi = (float(v) for v in np.percentile(z, PERCENTILES, method="linear"))
    if not lo < hi:
        mid = 0.5 * (lo + hi)
        lo, hi = mid - CUT_EPS, mid + CUT_EPS
    return lo, hi


def calibrate_risk(x_pkg, gamma_r: float) -> RiskParams:
    """Scale from the median positive volume; cuts from the z percentiles."""
    x = np.asarray(x_pkg, dtype=float)
    positive = x[x > 0]
    if positive.size == 0:
        raise CalibrationError("risk calibration needs at least one seller with positive volume")
    scale = float(np.median(positive))
    return RiskParams(gamma_r, scale, percentile_cuts(z_transform(x, scale)))


def draw_categories(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw of classes 1..3 from per-row probabilities and uniforms."""
    cdf1 = probs[..., 0]
    cdf2 = cdf1 + probs[..., 1]
    return 1 + (u >= cdf1).astype(int) + (u >= cdf2).astype(int)


def assign_risk(x_pkg, params: RiskParams, rng: np.random.Generator) -> np.ndarray:
    """One risk class per seller; consumes one uniform per seller."""
    x = np.atleast_1d(np.asarray(x_pkg, dtype=float))
    probs = ordered_logit_probs(z_transform(x, params.scale_r), params.gamma_r, params.cuts_r)
    return draw_categories(probs, rng.random(len(x)))


def expected_class_shares(x_pkg, params: RiskParams) -> np.ndarray:
    z = z_transform(x_pkg, params.scale_r)
    return ordered_logit_probs(z, params.gamma_r, params.cuts_r).mean(axis=0)


@dataclass
class EnforcementState:
    """Calibration carried between enforcement updates within one run."""

    scale_e: float | None = None
    cuts_e: tuple[float, float] | None = None


def window_totals(
    neighborhood: sparse.spmatrix, volume_history: np.ndarray, t: int, window: int
) -> np.ndarray:
    """Per-cell volume traded in the cell and its ring over periods ``[t - window, t)``.

    ``volume_history[p, c]`` is the volume sold by sellers located in cell
    ``c`` during period ``p`` (row 0 is the empty pre-history).
    """
    lo = max(t - window, 0)
    recent = volume_history[lo:t].sum(axis=0)
    return np.asarray(neighborhood @ recent).ravel()


def enforcement_step(
    neighborhood: sparse.spmatrix,
    seller_cells: np.ndarray,
    e_state: np.ndarray,
    volume_history: np.ndarray,
    t: int,
    params: EnforceParams,
    state: EnforcementState,
    rng: np.random.Generator,
) -> np.ndarray:
    """Enforcement classes for period ``t`` (returns ``e_state`` untouched off-schedule).

    Sellers whose neighbourhood saw no trade in the window sit at the
    baseline 1.  For the rest, the score is mapped through the ordered logit
    with cut points recalibrated on the currently active sellers.  One
    uniform is consumed per seller on every scheduled update.
    """
    if t % params.t_e != 0:
        return e_state
    totals = window_totals(neighborhood, volume_history, t, params.window)[seller_cells]
    u = rng.random(len(seller_cells))
    new = np.ones(len(seller_cells), dtype=int)
    active = totals > 0
    if not active.any():
        return new

    if params.scale_e is not None:
        state.scale_e = params.scale_e
    elif state.scale_e is None:
        state.scale_e = float(np.median(totals[active]))
    z = z_transform(totals[active], state.scale_e)
    cuts = params.cuts_e if params.cuts_e is not None else percentile_cuts(z)
    state.cuts_e = cuts
    probs = ordered_logit_probs(z, params.gamma_e, cuts)
    new[active] = draw_categories(probs, u[active])
    return new
