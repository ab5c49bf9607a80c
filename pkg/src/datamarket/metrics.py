"""Per-period KPI rows and the panel CSV schema."""

from __future__ import annotations

from dataclasses import astuple, dataclass
from typing import Iterable

from .market import TradeRecord

PANEL_COLUMNS = (
    "seed", "regime", "share", "t", "trades", "volume",
    "buyer_surplus", "seller_surplus", "externality", "total_welfare",
)
OUTCOMES = ("trades", "volume", "buyer_surplus", "seller_surplus", "externality", "total_welfare")


@dataclass(frozen=True)
class KpiRow:
    seed: int
    regime: str
    share: float
    t: int
    trades: int
    volume: float
    buyer_surplus: float
    seller_surplus: float
    externality: float
    total_welfare: float

    def as_tuple(self) -> tuple:
        return astuple(self)


def collect(records: Iterable[TradeRecord], seed: int, regime: str, share: float, t: int) -> KpiRow:
    """Sum one period's trades; welfare is CS + PS - externality."""
    n = 0
    vol = cs = ps = ext = 0.0
    for r in records:
        n += 1
        vol += r.volume
        cs += r.buyer_surplus
        ps += r.seller_surplus
        ext += r.externality
    return KpiRow(seed, regime, share, t, n, vol, cs, ps, ext, cs + ps - ext)
