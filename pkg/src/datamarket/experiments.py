"""Seeds x regimes experiment grids with common random numbers.

Every run draws from named substreams of its master seed (see
:mod:`datamarket.streams`).  All regimes run from one seed therefore share
the same population, risk classes, exchange/consent draws, enforcement
uniforms and buyer shuffles; only the rule differs.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from . import streams
from .agents import Buyers, Hotspot, Sellers, VolumeParams, default_budget_bands, seed_agents, synth_density
from .config import RegimeEntry, RunConfig, to_dict
from .environment import (
    EnforceParams,
    EnforcementState,
    RiskParams,
    assign_risk,
    calibrate_risk,
    enforcement_step,
)
from .hexgrid import Grid, assign_tiers, build_grid, load_density_csv
from .market import MarketState, TradeRecord, market_step
from .metrics import PANEL_COLUMNS, KpiRow, collect
from .regimes import SHARE_KINDS, RegimeConfig, apply_regime_flags

log = logging.getLogger(__name__)

TRADE_COLUMNS = (
    "t", "buyer_id", "seller_id", "cell_b", "cell_s", "price", "volume", "wtp", "wta",
    "buyer_surplus", "seller_surplus", "externality", "on_exchange", "regime", "seed",
)


@dataclass(frozen=True)
class ExperimentPlan:
    config: RunConfig
    T: int
    seeds: tuple[int, ...]
    regimes: tuple[RegimeConfig, ...]
    share_grid: tuple[float, ...] = ()

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("horizon T must be >= 1")
        if not self.seeds:
            raise ValueError("need at least one seed")
        if any(not 0.0 <= s <= 1.0 for s in self.share_grid):
            raise ValueError("share values must lie in [0, 1]")


def plan_from_config(cfg: RunConfig) -> ExperimentPlan:
    regimes = []
    for entry in cfg.regimes:
        base = dict(kind=entry.kind, consent_prob=entry.consent_prob,
                    join_prob=entry.join_prob, platform_fee=entry.platform_fee)
        if entry.sweep_share and entry.kind in SHARE_KINDS:
            regimes.extend(RegimeConfig(share=s, **base) for s in cfg.plan.share_grid)
        else:
            regimes.append(RegimeConfig(share=entry.share, **base))
    return ExperimentPlan(
        cfg, cfg.plan.T, tuple(cfg.plan.seeds), tuple(regimes), tuple(cfg.plan.share_grid)
    )


# --- world construction ----------------------------------------------------


def build_world(cfg: RunConfig) -> Grid:
    """Grid with tiers; independent of the seed."""
    g = cfg.grid
    grid = build_grid(g.width, g.height, g.cell_radius_km)
    if g.density_csv:
        buyer_d, seller_d = load_density_csv(g.density_csv, grid)
    else:
        def hotspots(specs):
            return [Hotspot(grid.index[(h.q, h.r)], h.intensity, h.decay) for h in specs]
        buyer_d = synth_density(grid, hotspots(g.buyer_hotspots), g.density_floor)
        seller_d = synth_density(grid, hotspots(g.seller_hotspots), g.density_floor)
    return assign_tiers(grid, buyer_d, seller_d)


def budget_bands(cfg: RunConfig):
    a = cfg.agents
    if a.budget_bands:
        return tuple(tuple(b) for b in a.budget_bands)
    return default_budget_bands(a.base_budget, 5, a.top_budget)


@dataclass
class Population:
    buyers: Buyers
    sellers: Sellers
    risk: RiskParams


def init_population(cfg: RunConfig, grid: Grid, seed: int) -> Population:
    """Agents and risk classes for one seed (shared by every regime)."""
    a = cfg.agents
    buyers, sellers = seed_agents(
        grid, cfg.coefficients.buyer, cfg.coefficients.seller,
        VolumeParams(a.pkg_min, a.pkg_max, a.level_step), budget_bands(cfg),
        streams.substream(seed, streams.AGENTS), initial_stock=a.initial_stock,
    )
    env = cfg.env
    if len(sellers):
        risk = calibrate_risk(sellers.x_pkg, env.gamma_r)
        if env.scale_r is not None or env.cuts_r is not None:
            risk = RiskParams(env.gamma_r, env.scale_r or risk.scale_r, env.cuts_r or risk.cuts_r)
        sellers.r_class = assign_risk(sellers.x_pkg, risk, streams.substream(seed, streams.RISK))
    else:
        risk = RiskParams(env.gamma_r, 1.0, (0.0, 1.0))
    return Population(buyers, sellers, risk)


def enforce_params(cfg: RunConfig) -> EnforceParams:
    e = cfg.env
    return EnforceParams(e.gamma_e, e.window, e.t_e, e.scale_e, e.cuts_e)


# --- runs ------------------------------------------------------------------


@dataclass
class RunResult:
    seed: int
    regime: RegimeConfig
    panel: list[KpiRow]
    trades: list[TradeRecord]
    e_history: np.ndarray = field(repr=False, default=None)  # (T, n_sellers)
    r_class: np.ndarray = field(repr=False, default=None)
    initial_budget: np.ndarray = field(repr=False, default=None)
    final_budget: np.ndarray = field(repr=False, default=None)

    @property
    def n_trades(self) -> int:
        return len(self.trades)

    @property
    def welfare(self) -> float:
        return sum(r.total_welfare for r in self.panel)

    @property
    def on_exchange_trades(self) -> int:
        return sum(1 for tr in self.trades if tr.on_exchange)


def simulate(
    cfg: RunConfig, grid: Grid, population: Population, seed: int, regime: RegimeConfig, T: int
) -> RunResult:
    """Run one regime for ``T`` periods on a private copy of ``population``."""
    buyers, sellers = population.buyers.copy(), population.sellers.copy()
    r_initial = sellers.r_class.copy()
    apply_regime_flags(sellers, regime, streams.substream(seed, streams.FLAGS))
    log_d = np.log1p(
        _distances(grid, buyers.cell_id, sellers.cell_id)
    )
    state = MarketState(buyers, sellers, cfg.coefficients.buyer, cfg.coefficients.seller, log_d)
    enf_rng = streams.substream(seed, streams.ENFORCEMENT)
    shuffle_rng = streams.substream(seed, streams.SHUFFLE)
    params, enf_state = enforce_params(cfg), EnforcementState()

    volume_history = np.zeros((T + 1, len(grid.cells)))
    e_history = np.zeros((T, len(sellers)), dtype=np.int8)
    budget0 = buyers.m_budget.copy()
    panel, trades = [], []
    share = regime.effective_share
    for t in range(1, T + 1):
        sellers.e_state = enforcement_step(
            grid.neighborhood, sellers.cell_id, sellers.e_state, volume_history, t,
            params, enf_state, enf_rng,
        )
        e_history[t - 1] = sellers.e_state
        records = market_step(state, regime, t, shuffle_rng, cfg.market.connect_on_handshake)
        for rec in records:
            volume_history[t, rec.cell_s] += rec.volume
        panel.append(collect(records, seed, regime.kind.value, share, t))
        trades.extend(records)
    assert np.array_equal(r_initial, sellers.r_class)
    return RunResult(seed, regime, panel, trades, e_history, sellers.r_class.copy(),
                     budget0, buyers.m_budget.copy())


def _distances(grid: Grid, cells_a, cells_b) -> np.ndarray:
    # distances between cells, then gathered per agent pair
    dcell = np.sqrt(((grid.centroids[:, None, :] - grid.centroids[None, :, :]) ** 2).sum(-1)) \
        if len(grid.cells) <= 4000 else None
    if dcell is not None:
        return dcell[np.ix_(cells_a, cells_b)]
    pa, pb = grid.centroids[cells_a], grid.centroids[cells_b]
    return np.sqrt(((pa[:, None, :] - pb[None, :, :]) ** 2).sum(-1))


def run_one(plan: ExperimentPlan, seed: int, regime: RegimeConfig, grid: Grid | None = None) -> RunResult:
    grid = grid if grid is not None else build_world(plan.config)
    population = init_population(plan.config, grid, seed)
    return simulate(plan.config, grid, population, seed, regime, plan.T)


# --- grids -----------------------------------------------------------------


@dataclass(frozen=True)
class RunSummary:
    seed: int
    label: str
    trades: int
    welfare: float
    on_exchange_trades: int


@dataclass
class GridResult:
    panel: pd.DataFrame
    summaries: list[RunSummary]
    meta: dict

    @property
    def on_exchange_share(self) -> float:
        total = sum(s.trades for s in self.summaries)
        return sum(s.on_exchange_trades for s in self.summaries) / total if total else 0.0


def write_panel_csv(path: Path, rows: Iterable[KpiRow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PANEL_COLUMNS)
        for row in rows:
            w.writerow(row.as_tuple())


def write_trades_csv(path: Path, records: Iterable[TradeRecord], regime: str, seed: int) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRADE_COLUMNS)
        for r in records:
            w.writerow([
                r.period, r.buyer_id, r.seller_id, r.cell_b, r.cell_s, r.price, r.volume,
                r.wtp, r.wta, r.buyer_surplus, r.seller_surplus, r.externality,
                int(r.on_exchange), regime, seed,
            ])


def _run_seed(args) -> list[tuple[RunSummary, list[KpiRow]]]:
    cfg, grid, seed, regimes, T, out_dir = args
    population = init_population(cfg, grid, seed)
    out = []
    for regime in regimes:
        res = simulate(cfg, grid, population, seed, regime, T)
        if out_dir is not None:
            run_dir = Path(out_dir) / "runs" / regime.label / str(seed)
            try:
                run_dir.mkdir(parents=True, exist_ok=True)
                write_panel_csv(run_dir / "panel.csv", res.panel)
                write_trades_csv(run_dir / "trades.csv", res.trades, regime.label, seed)
            except OSError as exc:
                raise OSError(f"run seed={seed} regime={regime.label}: {exc}") from exc
        summary = RunSummary(seed, regime.label, res.n_trades, res.welfare, res.on_exchange_trades)
        out.append((summary, res.panel))
    return out


def default_workers() -> int:
    env = os.environ.get("DATAMARKET_THREADS")
    n = os.cpu_count() or 1
    if env:
        try:
            n = min(n, max(1, int(env)))
        except ValueError:
            log.warning("ignoring DATAMARKET_THREADS=%r", env)
    return n


def content_hash(obj) -> str:
    """Git blob hash of the canonical JSON encoding."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha1(b"blob %d\0" % len(blob) + blob).hexdigest()


def run_grid(
    plan: ExperimentPlan,
    out_dir: str | Path | None = None,
    workers: int | None = None,
    on_run=None,
) -> GridResult:
    """Run every seed x regime; optionally write per-run files and merged panel.

    Rows are ordered by seed, then by the plan's regime order, then t, so the
    merged panel does not depend on scheduling or worker count.
    """
    start = time.perf_counter()
    cfg = plan.config
    grid = build_world(cfg)
    workers = workers or default_workers()
    tasks = [(cfg, grid, seed, plan.regimes, plan.T, out_dir) for seed in plan.seeds]

    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_seed, tasks))
    else:
        results = [_run_seed(t) for t in tasks]

    summaries, rows = [], []
    for per_seed in results:
        for summary, panel in per_seed:
            summaries.append(summary)
            rows.extend(panel)
            if on_run is not None:
                on_run(summary)
    panel = pd.DataFrame([r.as_tuple() for r in rows], columns=list(PANEL_COLUMNS))
    echo = to_dict(cfg)
    meta = {
        "config": echo,
        "config_hash": content_hash(echo),
        "n_runs": len(summaries),
        "n_rows": len(panel),
        "wall_time_s": round(time.perf_counter() - start, 3),
    }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_panel_csv(out / "panel_all.csv", rows)
        (out / "meta.json").write_text(json.dumps(meta, indent=2))
    return GridResult(panel, summaries, meta)


# --- presets ---------------------------------------------------------------

PRESETS = {
    "table3": ["Baseline", "PME"],
    "table4": ["Baseline", "IC", "LRCO", "RI"],
    "table5_risk": ["ShareRisk*"],
    "table5_enforce": ["ShareRiskEnforce*"],
}


def preset_plan(name: str, cfg: RunConfig | None = None, **regime_kwargs) -> ExperimentPlan:
    """Plans shaped like the published regression tables (``*`` = share sweep)."""
    cfg = cfg or RunConfig()
    entries = []
    for kind in PRESETS[name]:
        sweep = kind.endswith("*")
        entries.append(RegimeEntry(kind=kind.rstrip("*"), sweep_share=sweep, **regime_kwargs))
    return plan_from_config(replace(cfg, regimes=entries))
