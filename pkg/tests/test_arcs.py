import json

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from datamarket.arcs import ARC_PROPERTIES, trade_arcs, write_arcs
from datamarket.hexgrid import build_grid

GRID = build_grid(4, 3, 10.0)


def log(rows):
    cols = ["t", "cell_b", "cell_s", "volume", "price", "regime", "on_exchange"]
    return pd.DataFrame(rows, columns=cols)


def assert_valid_geojson(fc):
    assert fc["type"] == "FeatureCollection"
    for f in fc["features"]:
        assert f["type"] == "Feature"
        geom = f["geometry"]
        assert geom["type"] == "LineString"
        assert len(geom["coordinates"]) >= 2
        assert all(len(p) == 2 and all(np.isfinite(p)) for p in geom["coordinates"])
        assert set(f["properties"]) == set(ARC_PROPERTIES)


def test_one_deal_gives_one_linestring_between_centroids():
    fc = trade_arcs(log([(3, 0, 5, 12.345678901234, 7.5, "RI", 0)]), GRID)
    assert_valid_geojson(fc)
    (f,) = fc["features"]
    assert f["geometry"]["coordinates"] == [GRID.centroids[0].tolist(), GRID.centroids[5].tolist()]
    assert f["properties"] == {"t": 3, "volume": 12.345678901234, "price": 7.5, "regime": "RI",
                               "on_exchange": False}
    assert fc["coordinate_system"]["units"] == "km"


def test_time_filter():
    trades = log([(t, 0, 1, 1.0, 1.0, "Baseline", 0) for t in (10, 25, 26, 50)])
    fc = trade_arcs(trades, GRID, t_max=25)
    assert [f["properties"]["t"] for f in fc["features"]] == [10, 25]
    fc = trade_arcs(trades, GRID, t_min=26, t_max=50)
    assert [f["properties"]["t"] for f in fc["features"]] == [26, 50]


def test_empty_selection_is_valid_empty_collection(tmp_path):
    fc = trade_arcs(log([]), GRID)
    assert fc["features"] == []
    path = tmp_path / "empty.geojson"
    write_arcs(path, fc)
    assert json.loads(path.read_text())["type"] == "FeatureCollection"


def test_out_of_grid_cell_rejected():
    with pytest.raises(ValueError):
        trade_arcs(log([(1, 0, 99, 1.0, 1.0, "RI", 0)]), GRID)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 100), st.integers(0, 11), st.integers(0, 11),
                          st.floats(0.01, 1e6), st.floats(0, 1e6), st.booleans()), max_size=20))
def test_volume_pass_through_and_validity(rows):
    trades = log([(t, b, s, v, p, "PME", int(x)) for t, b, s, v, p, x in rows])
    fc = trade_arcs(trades, GRID)
    assert_valid_geojson(json.loads(json.dumps(fc)))
    assert [f["properties"]["volume"] for f in fc["features"]] == [r[3] for r in rows]
    assert [f["properties"]["on_exchange"] for f in fc["features"]] == [r[5] for r in rows]
