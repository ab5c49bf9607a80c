"""GeoJSON trade arcs in the grid's planar kilometre frame."""

from __future__ import annotations

import json
from pathlib import Path

import pandas as pd

from .hexgrid import Grid

ARC_PROPERTIES = ("t", "volume", "price", "regime", "on_exchange")

# RFC 7946 assumes WGS84; the sandbox is planar, so say so up front.
COORDINATE_SYSTEM = {
    "type": "planar",
    "units": "km",
    "description": "x/y of hexagon centroids measured from the centroid of axial cell (0, 0)",
}


def trade_arcs(trades: pd.DataFrame, grid: Grid, t_min: int | None = None, t_max: int | None = None) -> dict:
    """FeatureCollection with one LineString (buyer cell -> seller cell) per deal."""
    sel = trades
    if t_min is not None:
        sel = sel[sel["t"] >= t_min]
    if t_max is not None:
        sel = sel[sel["t"] <= t_max]
    centroids = grid.centroids
    n_cells = len(grid.cells)
    features = []
    for row in sel.itertuples(index=False):
        cb, cs = int(row.cell_b), int(row.cell_s)
        if not (0 <= cb < n_cells and 0 <= cs < n_cells):
            raise ValueError(f"trade at t={row.t} references a cell outside the grid")
        features.append({
            "type": "Feature",
            "geometry": {
                "type": "LineString",
                "coordinates": [
                    [float(centroids[cb, 0]), float(centroids[cb, 1])],
                    [float(centroids[cs, 0]), float(centroids[cs, 1])],
                ],
            },
            "properties": {
                "t": int(row.t),
                "volume": float(row.volume),
                "price": float(row.price),
                "regime": str(row.regime),
                "on_exchange": bool(int(row.on_exchange)),
            },
        })
    return {"type": "FeatureCollection", "coordinate_system": COORDINATE_SYSTEM, "features": features}


def write_arcs(path: str | Path, collection: dict) -> None:
    Path(path).write_text(json.dumps(collection))
