"""Two-way fixed-effects regressions with seed-clustered standard errors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd
from scipy import stats

from .metrics import OUTCOMES


class RankDeficiencyError(ValueError):
    """Regressors are collinear once the fixed effects are swept out."""


class EstimationError(ValueError):
    pass


@dataclass(frozen=True)
class FeEstimate:
    outcome: str
    regressor: str
    coef: float
    se: float
    t: float
    p: float
    n: int
    r2: float  # within R-squared
    n_clusters: int

    @property
    def df(self) -> int:
        return self.n_clusters - 1


@dataclass(frozen=True)
class FeResult:
    outcome: str
    estimates: tuple[FeEstimate, ...]
    n: int
    r2: float
    n_clusters: int
    k: int  # parameters counted in the small-sample correction

    def __getitem__(self, regressor: str) -> FeEstimate:
        for e in self.estimates:
            if e.regressor == regressor:
                return e
        raise KeyError(regressor)


def _codes(col) -> tuple[np.ndarray, int]:
    codes, uniques = pd.factorize(np.asarray(col), sort=True)
    return codes, len(uniques)


def demean(values: np.ndarray, groups: Sequence[np.ndarray], tol: float = 1e-13, max_iter: int = 10_000) -> np.ndarray:
    """Sweep out every grouping by alternating projections.

    ``values`` is (n,) or (n, k); each entry of ``groups`` holds integer
    codes.  One pass is exact for a balanced two-way layout; unbalanced
    panels iterate until the update is below ``tol`` relative to the data.
    """
    v = np.array(values, dtype=float, copy=True)
    flat = v.ndim == 1
    if flat:
        v = v[:, None]
    coded = [_codes(g) for g in groups]
    scale = max(float(np.abs(v).max(initial=0.0)), 1.0)
    for _ in range(max_iter):
        delta = 0.0
        for codes, m in coded:
            counts = np.bincount(codes, minlength=m)[:, None]
            sums = np.stack([np.bincount(codes, weights=v[:, j], minlength=m) for j in range(v.shape[1])], 1)
            means = sums / np.maximum(counts, 1)
            v -= means[codes]
            delta = max(delta, float(np.abs(means).max(initial=0.0)))
        if delta <= tol * scale:
            break
    else:
        raise EstimationError("fixed-effect demeaning did not converge")
    return v[:, 0] if flat else v


def fe_regress(
    panel: pd.DataFrame,
    outcome: str,
    treatments: Sequence[str],
    fe: Sequence[str] = ("seed", "t"),
    cluster: str = "seed",
) -> FeResult:
    """OLS of ``outcome`` on ``treatments`` net of the ``fe`` effects.

    Standard errors are CR1 cluster-robust,
    ``G/(G-1) * (N-1)/(N-K)``, with t-statistics on ``G - 1`` degrees of
    freedom.  ``K`` counts the regressors, the intercept and the levels of
    every fixed effect that is not nested in the clusters.
    """
    treatments = list(treatments)
    if not treatments:
        raise EstimationError("at least one treatment regressor is required")
    missing = [c for c in [outcome, *treatments, *fe, cluster] if c not in panel.columns]
    if missing:
        raise KeyError(f"missing column(s): {', '.join(missing)}")
    n = len(panel)
    g_codes, G = _codes(panel[cluster])
    if G < 2:
        raise EstimationError(f"need at least 2 clusters, got {G}")

    groups = [panel[f].to_numpy() for f in fe]
    y = demean(panel[outcome].to_numpy(dtype=float), groups)
    X = demean(panel[treatments].to_numpy(dtype=float), groups)

    xtx = X.T @ X
    scale = np.abs(panel[treatments].to_numpy(dtype=float)).max(initial=1.0) ** 2 * n
    if np.linalg.matrix_rank(X, tol=1e-10 * np.sqrt(scale)) < len(treatments):
        raise RankDeficiencyError(
            f"treatments {treatments} are collinear after removing {', '.join(fe)} effects"
        )
    xtx_inv = np.linalg.inv(xtx)
    beta = xtx_inv @ (X.T @ y)
    resid = y - X @ beta

    k = len(treatments) + 1
    for f in fe:
        codes, m = _codes(panel[f])
        nested = pd.DataFrame({"f": codes, "g": g_codes}).groupby("f")["g"].nunique().max() == 1
        if not nested:
            k += m - 1
    scores = np.zeros((G, len(treatments)))
    np.add.at(scores, g_codes, X * resid[:, None])
    meat = scores.T @ scores
    correction = G / (G - 1) * (n - 1) / max(n - k, 1)
    vcov = correction * xtx_inv @ meat @ xtx_inv
    se = np.sqrt(np.clip(np.diag(vcov), 0.0, None))

    sst = float(y @ y)
    r2 = 1.0 - float(resid @ resid) / sst if sst > 0 else 0.0
    t = np.divide(beta, se, out=np.full_like(beta, np.nan), where=se > 0)
    p = 2.0 * stats.t.sf(np.abs(t), G - 1)
    estimates = tuple(
        FeEstimate(outcome, name, float(b), float(s), float(tt), float(pp), n, r2, G)
        for name, b, s, tt, pp in zip(treatments, beta, se, t, p)
    )
    return FeResult(outcome, estimates, n, r2, G, k)


def regime_dummies(panel: pd.DataFrame, labels: Sequence[str], column: str = "regime") -> pd.DataFrame:
    """Copy of ``panel`` with a 0/1 column per regime label."""
    out = panel.copy()
    present = set(out[column].unique())
    absent = [lab for lab in labels if lab not in present]
    if absent:
        raise KeyError(f"regime(s) not in panel: {', '.join(absent)}")
    for lab in labels:
        out[lab] = (out[column] == lab).astype(float)
    return out


def estimate_table(
    panel: pd.DataFrame, outcomes: Sequence[str], treatments: Sequence[str], **kwargs
) -> pd.DataFrame:
    """One row per (outcome, regressor) in the ``estimates.csv`` layout."""
    rows = []
    for outcome in outcomes:
        res = fe_regress(panel, outcome, treatments, **kwargs)
        rows += [(e.outcome, e.regressor, e.coef, e.se, e.t, e.n, e.r2) for e in res.estimates]
    return pd.DataFrame(rows, columns=["outcome", "regressor", "coef", "se", "t", "n", "r2"])


def binned_means(panel: pd.DataFrame, by: str = "share", outcomes: Sequence[str] = OUTCOMES) -> pd.DataFrame:
    """Per-value means and standard errors of each outcome, for binned scatters."""
    grouped = panel.groupby(by)[list(outcomes)]
    mean = grouped.mean().add_suffix("_mean")
    sem = grouped.sem().add_suffix("_se")
    count = grouped.size().rename("n")
    cols = [c for o in outcomes for c in (f"{o}_mean", f"{o}_se")]
    return pd.concat([mean, sem], axis=1)[cols].join(count).reset_index()
