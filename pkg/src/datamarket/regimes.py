"""Liability regimes as adjustments to WTA, WTP, market access and externality.

A seller's generalized cost splits into three parts (utility units)::

    private     = c0 + c1*s + c2*x
    risk        = beta_r*R + delta*R*E
    enforcement = beta_e*E

Each regime decides which parts the seller internalizes, which the buyer
takes on, and which leave the dyad as an externality.  Utility amounts are
converted to money with the price coefficient of whoever bears them.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .calibration import BuyerCoeffs, SellerCoeffs


class RegimeKind(str, Enum):
    BASELINE = "Baseline"
    PME = "PME"
    LRCO = "LRCO"
    IC = "IC"
    RI = "RI"
    SHARE_RISK = "ShareRisk"
    SHARE_RISK_ENFORCE = "ShareRiskEnforce"


SHARE_KINDS = (RegimeKind.SHARE_RISK, RegimeKind.SHARE_RISK_ENFORCE)

# tuned on the default world: ~3% of PME trades are on-exchange (target 3.58%)
DEFAULT_JOIN_PROB = 0.018
DEFAULT_CONSENT_PROB = 0.4


@dataclass(frozen=True)
class RegimeConfig:
    kind: RegimeKind = RegimeKind.BASELINE
    share: float = 0.0  # buyer's liability share (ShareRisk / ShareRiskEnforce only)
    consent_prob: float = DEFAULT_CONSENT_PROB  # IC
    join_prob: float = DEFAULT_JOIN_PROB  # PME
    platform_fee: float = 0.03  # PME

    def __post_init__(self):
        object.__setattr__(self, "kind", RegimeKind(self.kind))
        for name in ("share", "consent_prob", "join_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.platform_fee < 0:
            raise ValueError(f"platform_fee must be >= 0, got {self.platform_fee}")

    @property
    def effective_share(self) -> float:
        return self.share if self.kind in SHARE_KINDS else 0.0

    @property
    def label(self) -> str:
        if self.kind in SHARE_KINDS:
            return f"{self.kind.value}_{self.share:.2f}"
        return self.kind.value


def cost_parts(seller, coeffs: SellerCoeffs, R, E):
    private = coeffs.c0 + coeffs.c1 * seller.s + coeffs.c2 * seller.x_pkg
    risk = coeffs.beta_r * R + coeffs.delta * R * E
    enforcement = coeffs.beta_e * E
    return private, risk, enforcement


def _internalized_cost(regime: RegimeConfig, seller, coeffs: SellerCoeffs, R, E):
    # always summed as private + risk + enforcement so that limit cases
    # (share=0, everyone consenting) reproduce Baseline bit for bit
    private, risk, enf = cost_parts(seller, coeffs, R, E)
    kind = regime.kind
    R = np.asarray(R)
    if kind in (RegimeKind.BASELINE, RegimeKind.PME):
        return private + risk + enf
    if kind is RegimeKind.LRCO:
        low = R == 1
        return private + np.where(low, 0.0, risk) + np.where(low, 0.0, enf)
    if kind is RegimeKind.IC:
        return private + np.where(seller.consent, 0.0, risk) + enf
    if kind is RegimeKind.RI:
        return private + 0.0 * risk + enf
    if kind is RegimeKind.SHARE_RISK:
        return private + (1.0 - regime.share) * risk + enf
    if kind is RegimeKind.SHARE_RISK_ENFORCE:
        keep = 1.0 - regime.share
        return private + keep * risk + keep * enf
    raise ValueError(f"unknown regime {kind}")


def adjust_wta(regime: RegimeConfig, seller, coeffs: SellerCoeffs, R, E):
    """Seller's regime-specific WTA before the price ratchet."""
    wta = _internalized_cost(regime, seller, coeffs, R, E) / seller.alpha
    if regime.kind is RegimeKind.PME:
        wta = wta * np.where(seller.on_exchange, 1.0 + regime.platform_fee, 1.0)
    return wta


def adjust_wtp(
    regime: RegimeConfig,
    buyer,
    seller,
    base_wtp,
    d,
    R,
    E,
    buyer_coeffs: BuyerCoeffs,
    seller_coeffs: SellerCoeffs,
    log_d=None,
):
    """Buyer's regime-specific WTP.

    ``log_d`` may carry a precomputed ``ln(1 + d)`` (then ``d`` is ignored).
    """
    kind = regime.kind
    if kind is RegimeKind.PME:
        if log_d is None:
            log_d = np.log1p(d)
        return base_wtp + np.where(seller.on_exchange, buyer_coeffs.kappa * log_d, 0.0) / buyer.alpha
    if kind in SHARE_KINDS:
        _, risk, enf = cost_parts(seller, seller_coeffs, R, E)
        borne = risk if kind is RegimeKind.SHARE_RISK else risk + enf
        return base_wtp - regime.share * borne / buyer.alpha
    return base_wtp


def access_filter(regime: RegimeConfig, seller):
    """Whether buyers may see and trade with the seller."""
    if regime.kind is RegimeKind.IC:
        return np.asarray(seller.consent, dtype=bool)
    return np.ones_like(np.asarray(seller.consent, dtype=bool))


def externality_of_trade(regime: RegimeConfig, seller, coeffs: SellerCoeffs, R, E):
    """Money-metric harm of a trade that neither party internalizes."""
    _, risk, enf = cost_parts(seller, coeffs, R, E)
    kind = regime.kind
    if kind is RegimeKind.LRCO:
        ext = np.where(np.asarray(R) == 1, risk + enf, 0.0)
    elif kind is RegimeKind.IC:
        ext = np.where(seller.consent, risk, 0.0)
    elif kind is RegimeKind.RI:
        ext = risk
    else:
        ext = np.zeros_like(np.asarray(risk, dtype=float))
    return ext / seller.alpha


def apply_regime_flags(sellers, regime: RegimeConfig, rng: np.random.Generator) -> None:
    """Set consent / exchange-membership flags in place.

    Two uniforms per seller are always drawn, whatever the regime, so every
    regime run from the same seed sees the same underlying draws.
    """
    n = len(sellers)
    u_consent = rng.random(n)
    u_join = rng.random(n)
    if regime.kind is RegimeKind.IC:
        sellers.consent = u_consent < regime.consent_prob
    else:
        sellers.consent = np.ones(n, dtype=bool)
    if regime.kind is RegimeKind.PME:
        sellers.on_exchange = u_join < regime.join_prob
    else:
        sellers.on_exchange = np.zeros(n, dtype=bool)
