"""Hexagonal sandbox: lattice construction, centroid distances and resource tiers.

Cells live on a flat-top axial lattice laid out as a ``width x height``
parallelogram.  Axial ``(q, r)`` maps to planar kilometres as::

    x = R * 3/2 * q
    y = R * sqrt(3) * (r + q/2)

where ``R`` is the circumradius, so adjacent centroids sit ``sqrt(3) * R`` apart.
"""

from __future__ import annotations

import csv
import math
from bisect import bisect_left
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import sparse

N_TIERS = 6  # tier 0 (empty) plus five occupied tiers

AXIAL_DIRECTIONS = ((1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1))


class InvalidConfigurationError(ValueError):
    pass


class InvalidInputError(ValueError):
    pass


@dataclass(frozen=True)
class Cell:
    id: int
    axial: tuple[int, int]
    centroid: tuple[float, float]
    buyer_tier: int = 0
    seller_tier: int = 0


@dataclass(frozen=True)
class Grid:
    cells: tuple[Cell, ...]
    cell_radius_km: float
    index: dict[tuple[int, int], int] = field(repr=False)
    neighbors: tuple[tuple[int, ...], ...] = field(repr=False)

    def __len__(self) -> int:
        return len(self.cells)

    @cached_property
    def centroids(self) -> np.ndarray:
        """(n_cells, 2) array of planar centroids in km."""
        return np.array([c.centroid for c in self.cells], dtype=float)

    @cached_property
    def adjacency(self) -> sparse.csr_matrix:
        """Sparse 0/1 adjacency matrix (no self loops)."""
        rows = [a for a, nbrs in enumerate(self.neighbors) for _ in nbrs]
        cols = [b for nbrs in self.neighbors for b in nbrs]
        n = len(self.cells)
        data = np.ones(len(rows), dtype=float)
        return sparse.csr_matrix((data, (rows, cols)), shape=(n, n))

    @cached_property
    def neighborhood(self) -> sparse.csr_matrix:
        """Own cell plus the adjacent ring, as a sparse operator."""
        return (self.adjacency + sparse.identity(len(self.cells), format="csr")).tocsr()

    @property
    def buyer_tiers(self) -> np.ndarray:
        return np.array([c.buyer_tier for c in self.cells], dtype=int)

    @property
    def seller_tiers(self) -> np.ndarray:
        return np.array([c.seller_tier for c in self.cells], dtype=int)

    def cell_of(self, q: int, r: int) -> Cell:
        return self.cells[self.index[(q, r)]]


def axial_to_planar(q: int, r: int, radius_km: float) -> tuple[float, float]:
    return (radius_km * 1.5 * q, radius_km * math.sqrt(3.0) * (r + q / 2.0))


def build_grid(width_cells: int, height_cells: int, cell_radius_km: float) -> Grid:
    """Build a ``width x height`` axial parallelogram of flat-top hexagons."""
    if width_cells < 1 or height_cells < 1:
        raise InvalidConfigurationError(
            f"grid dimensions must be >= 1, got {width_cells}x{height_cells}"
        )
    if not cell_radius_km > 0:
        raise InvalidConfigurationError(f"cell radius must be > 0, got {cell_radius_km}")

    cells = []
    index: dict[tuple[int, int], int] = {}
    for r in range(height_cells):
        for q in range(width_cells):
            cid = len(cells)
            index[(q, r)] = cid
            cells.append(Cell(cid, (q, r), axial_to_planar(q, r, cell_radius_km)))

    neighbors = []
    for cell in cells:
        q, r = cell.axial
        nbrs = tuple(
            index[(q + dq, r + dr)] for dq, dr in AXIAL_DIRECTIONS if (q + dq, r + dr) in index
        )
        neighbors.append(nbrs)
    return Grid(tuple(cells), float(cell_radius_km), index, tuple(neighbors))


def distance_km(grid: Grid, a: int, b: int) -> float:
    """Euclidean distance between the centroids of cells ``a`` and ``b``."""
    n = len(grid.cells)
    for cid in (a, b):
        if not 0 <= cid < n:
            raise KeyError(f"unknown cell id {cid} (grid has {n} cells)")
    ax, ay = grid.cells[a].centroid
    bx, by = grid.cells[b].centroid
    return math.hypot(ax - bx, ay - by)


def pairwise_distance_km(grid: Grid, cells_a: np.ndarray, cells_b: np.ndarray) -> np.ndarray:
    """Distance matrix between two lists of cell ids."""
    pa = grid.centroids[np.asarray(cells_a, dtype=int)]
    pb = grid.centroids[np.asarray(cells_b, dtype=int)]
    diff = pa[:, None, :] - pb[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


# --- Jenks natural breaks -------------------------------------------------


def _jenks_class_starts(values: np.ndarray, weights: np.ndarray, k: int) -> list[int]:
    """Fisher's exact DP over sorted unique values with multiplicities.

    Returns the start index of each of the ``k`` classes.
    """
    n = len(values)
    w = np.concatenate([[0.0], np.cumsum(weights)])
    s1 = np.concatenate([[0.0], np.cumsum(weights * values)])
    s2 = np.concatenate([[0.0], np.cumsum(weights * values * values)])

    def ssd(lo: np.ndarray | int, hi: int) -> np.ndarray:
        # within-class SSD of values[lo:hi] for a vector of lo's
        cw = w[hi] - w[lo]
        c1 = s1[hi] - s1[lo]
        c2 = s2[hi] - s2[lo]
        return np.maximum(c2 - c1 * c1 / cw, 0.0)

    # cost[m][i]: best SSD splitting values[:i] into m+1 classes
    cost = np.full((k, n + 1), np.inf)
    start = np.zeros((k, n + 1), dtype=int)
    for i in range(1, n + 1):
        cost[0, i] = ssd(0, i)
    for m in range(1, k):
        for i in range(m + 1, n + 1):
            lo = np.arange(m, i)  # last class is values[lo:i]
            cand = cost[m - 1, lo] + ssd(lo, i)
            j = int(np.argmin(cand))
            cost[m, i] = cand[j]
            start[m, i] = lo[j]

    starts = []
    hi = n
    for m in range(k - 1, 0, -1):
        lo = int(start[m, hi])
        starts.append(lo)
        hi = lo
    starts.append(0)
    return starts[::-1]


def jenks_breaks(values: Sequence[float], k: int) -> list[float]:
    """Exact Jenks natural breaks.

    Returns ascending break values; each break is the maximum of its class, so a
    value ``v`` belongs to class ``bisect_left(breaks, v)``.  When ``values``
    holds fewer than ``k`` distinct numbers the class count collapses to the
    number of distinct values and fewer breaks are returned.
    """
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise InvalidInputError("jenks_breaks needs at least one value")
    if k < 1:
        raise InvalidInputError(f"class count must be >= 1, got {k}")
    uniq, counts = np.unique(arr, return_counts=True)
    k_eff = min(k, len(uniq))
    if k_eff == 1:
        return []
    starts = _jenks_class_starts(uniq, counts.astype(float), k_eff)
    return [float(uniq[s - 1]) for s in starts[1:]]


def jenks_classify(values: Sequence[float], breaks: Sequence[float]) -> np.ndarray:
    """Class index 0..len(breaks) of each value."""
    return np.array([bisect_left(breaks, v) for v in np.asarray(values, dtype=float)], dtype=int)


def _tiers_for(density: np.ndarray) -> np.ndarray:
    tiers = np.zeros(len(density), dtype=int)
    positive = density > 0
    if positive.any():
        breaks = jenks_breaks(density[positive], N_TIERS - 1)
        tiers[positive] = jenks_classify(density[positive], breaks) + 1
    return tiers


def assign_tiers(grid: Grid, buyer_density: Sequence[float], seller_density: Sequence[float]) -> Grid:
    """Return a copy of ``grid`` with buyer and seller tiers 0..5 set.

    Zero-density cells get tier 0; the positive support is split into five
    Jenks classes mapped to tiers 1..5 in ascending order.
    """
    bd = np.asarray(buyer_density, dtype=float)
    sd = np.asarray(seller_density, dtype=float)
    n = len(grid.cells)
    if bd.shape != (n,) or sd.shape != (n,):
        raise InvalidInputError(
            f"density vectors must have length {n}, got {bd.shape} and {sd.shape}"
        )
    if (bd < 0).any() or (sd < 0).any():
        raise InvalidInputError("densities must be nonnegative")
    bt, st = _tiers_for(bd), _tiers_for(sd)
    cells = tuple(
        replace(c, buyer_tier=int(bt[c.id]), seller_tier=int(st[c.id])) for c in grid.cells
    )
    return replace(grid, cells=cells)


def load_density_csv(path: str | Path, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Read ``cell_id,buyer_density,seller_density`` rows for every cell."""
    n = len(grid.cells)
    buyer = np.full(n, np.nan)
    seller = np.full(n, np.nan)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        expected = ["cell_id", "buyer_density", "seller_density"]
        if reader.fieldnames != expected:
            raise InvalidInputError(f"{path}: header must be {','.join(expected)}")
        rows = 0
        for row in reader:
            cid = int(row["cell_id"])
            if not 0 <= cid < n:
                raise InvalidInputError(f"{path}: cell_id {cid} outside grid of {n} cells")
            buyer[cid] = float(row["buyer_density"])
            seller[cid] = float(row["seller_density"])
            rows += 1
    if rows != n or np.isnan(buyer).any():
        raise InvalidInputError(f"{path}: expected one row per cell ({n}), got {rows}")
    return buyer, seller
