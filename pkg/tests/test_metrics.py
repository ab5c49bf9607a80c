from dataclasses import fields

from hypothesis import given, settings
from hypothesis import strategies as st

from datamarket.experiments import init_population, simulate
from datamarket.market import TradeRecord
from datamarket.metrics import OUTCOMES, PANEL_COLUMNS, KpiRow, collect
from datamarket.regimes import RegimeConfig


def rec(price=7.0, wtp=10.0, wta=4.0, volume=2.0, ext=0.0):
    return TradeRecord(1, 0, 0, 0, 0, price, volume, wtp, wta, wtp - price, price - wta, ext, False)


def test_kpi_fields_match_panel_schema():
    assert tuple(f.name for f in fields(KpiRow)) == PANEL_COLUMNS
    assert set(OUTCOMES) <= set(PANEL_COLUMNS)


def test_empty_period_is_all_zero():
    row = collect([], 3, "Baseline", 0.0, 5)
    assert row.as_tuple() == (3, "Baseline", 0.0, 5, 0, 0.0, 0.0, 0.0, 0.0, 0.0)


def test_single_trade_sums():
    row = collect([rec()], 0, "Baseline", 0.0, 1)
    assert (row.trades, row.volume, row.buyer_surplus, row.seller_surplus, row.total_welfare) == (1, 2, 3, 3, 6)


record = st.builds(
    lambda p, a, b, v, e: rec(price=a + p * (b), wtp=a + b, wta=a, volume=v, ext=e),
    st.floats(0, 1), st.floats(0, 100), st.floats(0, 100), st.floats(0.1, 50), st.floats(0, 10),
)


@settings(max_examples=100, deadline=None)
@given(st.lists(record, max_size=8), st.lists(record, max_size=8))
def test_additivity_and_welfare_identity(a, b):
    ra, rb, rab = (collect(x, 0, "X", 0.0, 1) for x in (a, b, a + b))
    for row in (ra, rb, rab):
        assert row.total_welfare == row.buyer_surplus + row.seller_surplus - row.externality
        assert row.trades >= 0 and row.volume >= 0 and row.externality >= 0
    assert rab.trades == ra.trades + rb.trades
    for name in ("volume", "buyer_surplus", "seller_surplus", "externality"):
        assert abs(getattr(rab, name) - getattr(ra, name) - getattr(rb, name)) <= 1e-9 * (1 + abs(getattr(rab, name)))


def test_panel_completeness_and_baseline_has_no_externality(small_cfg, small_grid):
    pop = init_population(small_cfg, small_grid, 0)
    for regime in (RegimeConfig(), RegimeConfig(kind="RI")):
        res = simulate(small_cfg, small_grid, pop, 0, regime, 12)
        assert [r.t for r in res.panel] == list(range(1, 13))
        for row in res.panel:
            assert row.total_welfare == row.buyer_surplus + row.seller_surplus - row.externality
            if regime.kind.value == "Baseline":
                assert row.externality == 0.0
