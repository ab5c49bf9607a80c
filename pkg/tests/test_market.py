import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from datamarket.agents import Buyers, Sellers
from datamarket.calibration import BuyerCoeffs, SellerCoeffs
from datamarket.experiments import simulate
from datamarket.market import (
    ContractViolation,
    MarketState,
    accept_offers,
    bargain_price,
    buyer_wtp,
    choose_targets,
    market_step,
    ratchet,
    seller_cost,
    seller_wta,
)
from datamarket.regimes import RegimeConfig

ALPHA_B = math.log1p(math.exp(0.6461))
ALPHA_S = math.log1p(math.exp(0.727))


def buyer(**kw):
    base = dict(x_stock=0.0, z=1, alpha=ALPHA_B)
    return SimpleNamespace(**{**base, **kw})


def seller(**kw):
    base = dict(x_pkg=1.0, s=3, alpha=ALPHA_S)
    return SimpleNamespace(**{**base, **kw})


# --- valuations ------------------------------------------------------------


def test_wtp_zero_coefficients():
    c = BuyerCoeffs(rho=0, beta=0, tau=0, kappa=0)
    assert buyer_wtp(buyer(), seller(), c, 10.0) == 0.0


def test_wtp_table_means_at_zero_distance():
    expected = (0.8093 * 1.0 + 0.454 * 3) / ALPHA_B
    assert buyer_wtp(buyer(), seller(), BuyerCoeffs(), 0.0) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(2.0340, abs=1e-4)


def test_wtp_unit_log_distance_drops_kappa():
    w0 = buyer_wtp(buyer(), seller(), BuyerCoeffs(), 0.0)
    w1 = buyer_wtp(buyer(), seller(), BuyerCoeffs(), math.e - 1)
    assert w0 - w1 == pytest.approx(1.2212 / ALPHA_B, abs=1e-12)
    assert w1 == pytest.approx((0.8093 + 1.362 - 1.2212) / ALPHA_B, abs=1e-12)


def test_wtp_stock_decay_and_full_form():
    c = BuyerCoeffs(gamma=0.0698, phi=-0.0282)
    b, s = buyer(x_stock=40.0, z=2), seller(x_pkg=5.0, s=4)
    num = math.exp(-0.0087 * 40) * 0.8093 * 5 + 0.454 * 4 + 0.0698 * 2 - 0.0282 * 8 - 1.2212 * math.log(1 + 7)
    assert buyer_wtp(b, s, c, 7.0) == pytest.approx(num / ALPHA_B, abs=1e-12)


def test_seller_cost_examples():
    zero = SellerCoeffs(c0=0, c2=0, beta_r=0, beta_e=0)
    assert seller_cost(seller(), zero, 2, 3) == 0.0
    assert seller_cost(seller(), SellerCoeffs(), 1, 1) == pytest.approx(8.887, abs=1e-12)
    assert seller_cost(seller(), SellerCoeffs(), 1, 3) - seller_cost(seller(), SellerCoeffs(), 1, 1) == \
        pytest.approx(5.952, abs=1e-12)


def test_seller_wta_examples():
    assert seller_wta(seller(), SellerCoeffs(), 1, 1) == pytest.approx(8.887 / ALPHA_S, abs=1e-12)
    assert 8.887 / ALPHA_S == pytest.approx(7.9255, abs=1e-4)
    zero = SellerCoeffs(c0=0, c2=0, beta_r=0, beta_e=0)
    assert seller_wta(seller(), zero, 1, 1) == 0.0
    alphas = np.linspace(0.2, 3.0, 20)
    wta = seller_wta(seller(alpha=alphas), SellerCoeffs(), 2, 2)
    assert (np.diff(wta) < 0).all()


def test_ratchet():
    assert ratchet(0.0, 5.0) == 5.0
    assert ratchet(7.0, 5.0) == 7.0


@pytest.mark.parametrize(
    "wtp, wta, s, z, expected",
    [(10, 4, 2, 2, 7.0), (10, 4, 5, 1, 9.0), (10, 4, 1, 5, 5.0)],
)
def test_bargain_price_examples(wtp, wta, s, z, expected):
    assert bargain_price(wtp, wta, s, z) == pytest.approx(expected, abs=1e-12)


def test_bargain_price_contract_violation():
    with pytest.raises(ContractViolation):
        bargain_price(3.0, 4.0, 1, 1)


@settings(max_examples=200, deadline=None)
@given(st.floats(-50, 50), st.floats(0, 50), st.integers(1, 5), st.integers(1, 5))
def test_bargain_price_in_bargaining_set(wta, gap, s, z):
    wtp = wta + gap
    p = bargain_price(wtp, wta, s, z)
    assert wta - 1e-9 <= p <= wtp + 1e-9


# --- offer selection ---------------------------------------------------------


@settings(max_examples=100, deadline=None)
@given(
    arrays(np.float64, (5, 7), elements=st.floats(-10, 10)),
    arrays(np.float64, 5, elements=st.floats(0.01, 100)),
    arrays(np.bool_, (5, 7)),
)
def test_argmax_invariant_to_positive_row_scaling(wtp, scale, connected):
    visible = np.ones(7, dtype=bool)
    t1, b1 = choose_targets(wtp, connected, visible)
    t2, b2 = choose_targets(wtp * scale[:, None], connected, visible)
    assert np.array_equal(t1, t2)
    assert np.array_equal(b1 > 0, b2 > 0)


def test_targets_skip_connected_and_hidden_sellers():
    wtp = np.array([[5.0, 9.0, 7.0]])
    t, b = choose_targets(wtp, np.array([[False, True, False]]), np.array([True, True, True]))
    assert t[0] == 2 and b[0] == 7.0
    t, b = choose_targets(wtp, np.zeros((1, 3), bool), np.array([True, False, False]))
    assert t[0] == 0


def test_accept_highest_wtp_then_lowest_id():
    target = np.array([0, 0, 0, 1, 1])
    best = np.array([3.0, 5.0, 5.0, -1.0, 2.0])
    assert sorted(accept_offers(target, best)) == [1, 4]


# --- market_step -------------------------------------------------------------


def one_on_one(wtp=10.0, wta=4.0, budget=100.0, s=1, z=1):
    buyers = Buyers(cell_id=np.array([0]), z=np.array([z]), x_stock=np.array([0.0]),
                    m_budget=np.array([budget]), alpha=np.array([1.0]))
    sellers = Sellers(cell_id=np.array([0]), s=np.array([s]), x_pkg=np.array([wtp]),
                      alpha=np.array([1.0]), r_class=np.array([1]))
    bc = BuyerCoeffs(rho=0.0, beta=1.0, tau=0.0, kappa=0.0)
    sc = SellerCoeffs(c0=wta, c2=0.0, beta_r=0.0, beta_e=0.0)
    return MarketState(buyers, sellers, bc, sc, np.zeros((1, 1)))


def test_single_deal_at_midpoint_and_budget_update():
    state = one_on_one()
    recs = market_step(state, RegimeConfig(), 1, np.random.default_rng(0))
    assert len(recs) == 1
    r = recs[0]
    assert r.price == 7.0 and state.buyers.m_budget[0] == 93.0
    assert r.buyer_surplus == 3.0 and r.seller_surplus == 3.0 and r.volume == 10.0
    assert state.buyers.x_stock[0] == 10.0 and state.sellers.last_price[0] == 7.0
    assert market_step(state, RegimeConfig(), 2, np.random.default_rng(0)) == []  # pair now connected


def test_no_trade_when_wtp_not_above_wta():
    state = one_on_one(wtp=4.0, wta=4.0)
    assert market_step(state, RegimeConfig(), 1, np.random.default_rng(0)) == []


def test_no_trade_when_price_exceeds_budget():
    state = one_on_one(budget=6.0)
    assert market_step(state, RegimeConfig(), 1, np.random.default_rng(0)) == []
    assert state.buyers.m_budget[0] == 6.0 and state.sellers.last_price[0] == 0.0


def test_failed_pair_stays_open_without_handshake_connect():
    state = one_on_one(budget=6.0)
    market_step(state, RegimeConfig(), 1, np.random.default_rng(0), connect_on_handshake=False)
    assert not state.connected[0, 0]
    state.buyers.m_budget[0] = 100.0
    assert len(market_step(state, RegimeConfig(), 2, np.random.default_rng(0), False)) == 1


def test_failed_pair_connects_on_handshake():
    state = one_on_one(budget=6.0)
    market_step(state, RegimeConfig(), 1, np.random.default_rng(0), connect_on_handshake=True)
    assert state.connected[0, 0]


# --- full-run invariants -------------------------------------------------------


@pytest.fixture(scope="module")
def baseline_run(small_cfg, small_grid):
    from datamarket.experiments import init_population

    pop = init_population(small_cfg, small_grid, 0)
    res = simulate(small_cfg, small_grid, pop, 0, RegimeConfig(), small_cfg.plan.T)
    assert res.n_trades > 20  # the fixture world must be active
    return pop, res


def test_price_bracketing_and_surplus_nonnegativity(baseline_run):
    _, res = baseline_run
    for r in res.trades:
        assert r.wta <= r.price <= r.wtp
        assert r.buyer_surplus >= 0 and r.seller_surplus >= 0
        assert r.buyer_surplus == r.wtp - r.price and r.seller_surplus == r.price - r.wta


def test_money_conservation_exact(baseline_run):
    _, res = baseline_run
    replay = res.initial_budget.copy()
    for r in res.trades:
        replay[r.buyer_id] -= r.price
    assert np.array_equal(replay, res.final_budget)
    assert (res.final_budget >= 0).all()


def test_no_repeat_pairs(baseline_run):
    _, res = baseline_run
    pairs = [(r.buyer_id, r.seller_id) for r in res.trades]
    assert len(pairs) == len(set(pairs))


def test_one_deal_per_agent_per_period(baseline_run):
    _, res = baseline_run
    seen = set()
    for r in res.trades:
        assert ("b", r.period, r.buyer_id) not in seen and ("s", r.period, r.seller_id) not in seen
        seen |= {("b", r.period, r.buyer_id), ("s", r.period, r.seller_id)}


def test_ratchet_nondecreasing_across_sales(baseline_run):
    _, res = baseline_run
    last = {}
    for r in sorted(res.trades, key=lambda r: r.period):
        assert r.price >= last.get(r.seller_id, 0.0)
        assert r.wta >= last.get(r.seller_id, 0.0)
        last[r.seller_id] = r.price


def test_risk_class_immutable(baseline_run):
    pop, res = baseline_run
    assert np.array_equal(pop.sellers.r_class, res.r_class)


def test_nonrival_packages(baseline_run):
    pop, res = baseline_run
    counts = np.bincount([r.seller_id for r in res.trades], minlength=len(pop.sellers))
    assert counts.max() > 1  # sold repeatedly
    for r in res.trades:
        assert r.volume == pop.sellers.x_pkg[r.seller_id]


def test_bit_identical_reruns(small_cfg, small_grid):
    from datamarket.experiments import init_population

    runs = [
        simulate(small_cfg, small_grid, init_population(small_cfg, small_grid, 3), 3,
                 RegimeConfig(kind="RI"), 15)
        for _ in range(2)
    ]
    assert runs[0].trades == runs[1].trades
    assert runs[0].panel == runs[1].panel
    assert np.array_equal(runs[0].e_history, runs[1].e_history)
