"""Valuations, bargaining, and the per-period offer/accept/settle protocol."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .agents import Buyers, Sellers
from .calibration import BuyerCoeffs, SellerCoeffs
from .regimes import (
    RegimeConfig,
    access_filter,
    adjust_wta,
    adjust_wtp,
    externality_of_trade,
)


class ContractViolation(ValueError):
    pass


def buyer_wtp(buyer, seller, coeffs: BuyerCoeffs, d, log_d=None):
    """Buyer WTP in money: reduced-form utility divided by the buyer's alpha.

    Attributes may be arrays that broadcast against each other (e.g. buyer
    columns against seller rows) to get a full WTP matrix.
    """
    if log_d is None:
        log_d = np.log1p(d)
    s, z = seller.s, buyer.z
    utility = (
        np.exp(-coeffs.rho * buyer.x_stock) * coeffs.beta * seller.x_pkg
        + coeffs.tau * s
        + coeffs.gamma * z
        + coeffs.phi * s * z
        - coeffs.kappa * log_d
    )
    return utility / buyer.alpha


def seller_cost(seller, coeffs: SellerCoeffs, R, E):
    """Generalized cost of a sale, in utility units."""
    return (
        coeffs.c0
        + coeffs.c1 * seller.s
        + coeffs.c2 * seller.x_pkg
        + coeffs.beta_r * R
        + coeffs.beta_e * E
        + coeffs.delta * R * E
    )


def seller_wta(seller, coeffs: SellerCoeffs, R, E):
    return seller_cost(seller, coeffs, R, E) / seller.alpha


def ratchet(last_price, fresh_wta):
    """Effective WTA never falls below the seller's last sale price."""
    return np.maximum(fresh_wta, last_price)


def bargain_price(wtp, wta, s, z):
    """Price weighted toward WTP by seller tier and toward WTA by buyer tier."""
    if np.any(np.asarray(wtp) < np.asarray(wta)):
        raise ContractViolation(f"no bargaining set: wtp {wtp} < wta {wta}")
    lam = s / (z + s)
    return lam * wtp + (1.0 - lam) * wta


@dataclass(frozen=True)
class TradeRecord:
    period: int
    buyer_id: int
    seller_id: int
    cell_b: int
    cell_s: int
    price: float
    volume: float
    wtp: float
    wta: float
    buyer_surplus: float
    seller_surplus: float
    externality: float
    on_exchange: bool


class _Cols:
    """Column view of a population: every attribute gets a trailing axis."""

    def __init__(self, pop, names):
        for n in names:
            setattr(self, n, getattr(pop, n)[:, None])


class _Rows:
    def __init__(self, pop, names):
        for n in names:
            setattr(self, n, getattr(pop, n)[None, :])


@dataclass
class MarketState:
    buyers: Buyers
    sellers: Sellers
    buyer_coeffs: BuyerCoeffs
    seller_coeffs: SellerCoeffs
    log_distance: np.ndarray  # ln(1 + d) for every (buyer, seller)
    connected: np.ndarray | None = None
    spent: float = 0.0
    _static: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.connected is None:
            self.connected = np.zeros((len(self.buyers), len(self.sellers)), dtype=bool)

    def static_utility(self) -> np.ndarray:
        """Per-run constant part of buyer utility (tiers and distance)."""
        if "u" not in self._static:
            c = self.buyer_coeffs
            s = self.sellers.s[None, :].astype(float)
            z = self.buyers.z[:, None].astype(float)
            self._static["u"] = c.tau * s + c.gamma * z + c.phi * s * z - c.kappa * self.log_distance
        return self._static["u"]

    def wtp_matrix(self, regime: RegimeConfig) -> np.ndarray:
        """Regime-adjusted WTP of every buyer for every seller."""
        b, s, c = self.buyers, self.sellers, self.buyer_coeffs
        f = np.exp(-c.rho * b.x_stock)
        utility = np.multiply.outer(f, c.beta * s.x_pkg)
        utility += self.static_utility()
        wtp = utility / b.alpha[:, None]
        return adjust_wtp(
            regime, _Cols(b, ("alpha",)), _Rows(s, ("s", "x_pkg", "on_exchange")), wtp,
            None, s.r_class[None, :], s.e_state[None, :], c, self.seller_coeffs,
            log_d=self.log_distance,
        )


def effective_wta(state: MarketState, regime: RegimeConfig) -> np.ndarray:
    s = state.sellers
    fresh = adjust_wta(regime, s, state.seller_coeffs, s.r_class, s.e_state)
    return ratchet(s.last_price, fresh)


def choose_targets(wtp: np.ndarray, connected: np.ndarray, visible: np.ndarray):
    """Each buyer's highest-WTP visible, unconnected seller and that WTP.

    Returns ``(target, best)``; buyers with no positive option get ``best <= 0``
    (or ``-inf``) and make no offer.
    """
    avail = np.where(connected | ~visible[None, :], -np.inf, wtp)
    target = np.argmax(avail, axis=1)
    return target, avail[np.arange(len(avail)), target]


def accept_offers(target: np.ndarray, best: np.ndarray) -> np.ndarray:
    """Buyers whose offer wins: per seller, highest WTP, ties to the lowest buyer id."""
    offering = np.flatnonzero(best > 0)
    o_target, o_wtp = target[offering], best[offering]
    ranked = np.lexsort((offering, -o_wtp, o_target))
    first = np.ones(len(ranked), dtype=bool)
    first[1:] = o_target[ranked][1:] != o_target[ranked][:-1]
    return offering[ranked[first]]


def market_step(
    state: MarketState,
    regime: RegimeConfig,
    t: int,
    rng: np.random.Generator,
    connect_on_handshake: bool = False,
) -> list[TradeRecord]:
    """One period of offers, acceptances and settlements.

    Each buyer offers to its highest-WTP visible, unconnected seller (only
    if that WTP is positive); each seller takes its highest-WTP offer, ties
    to the lowest buyer id.  A matched pair trades when WTP exceeds the
    seller's ratcheted WTA and the bargained price fits the buyer's budget.

    With ``connect_on_handshake`` an accepted pair is marked connected
    whether or not the deal closes, so the buyer moves on to its next
    seller; otherwise only executed deals connect a pair.
    """
    buyers, sellers = state.buyers, state.sellers
    nb, ns = len(buyers), len(sellers)
    order = rng.permutation(nb)
    if nb == 0 or ns == 0:
        return []

    wta = effective_wta(state, regime)
    wtp = state.wtp_matrix(regime)
    visible = access_filter(regime, sellers)
    target, best = choose_targets(wtp, state.connected, visible)
    winners = accept_offers(target, best)
    if winners.size == 0:
        return []
    accepted = np.zeros(nb, dtype=bool)
    accepted[winners] = True

    if connect_on_handshake:
        state.connected[winners, target[winners]] = True

    sc = state.seller_coeffs
    records = []
    for i in order:
        if not accepted[i]:
            continue
        j = int(target[i])
        p_wtp, p_wta = float(best[i]), float(wta[j])
        if p_wtp <= p_wta:
            continue
        price = float(bargain_price(p_wtp, p_wta, float(sellers.s[j]), float(buyers.z[i])))
        if price > buyers.m_budget[i]:
            continue
        buyers.m_budget[i] -= price
        state.spent += price
        buyers.x_stock[i] += sellers.x_pkg[j]
        sellers.last_price[j] = price
        state.connected[i, j] = True
        seller_j = sellers[j]
        ext = float(externality_of_trade(regime, seller_j, sc, seller_j.r_class, seller_j.e_state))
        records.append(
            TradeRecord(
                period=t, buyer_id=int(i), seller_id=j,
                cell_b=int(buyers.cell_id[i]), cell_s=int(sellers.cell_id[j]),
                price=price, volume=float(sellers.x_pkg[j]), wtp=p_wtp, wta=p_wta,
                buyer_surplus=p_wtp - price, seller_surplus=price - p_wta,
                externality=ext, on_exchange=bool(sellers.on_exchange[j]),
            )
        )
    return records
