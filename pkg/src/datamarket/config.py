"""Run configuration: TOML file -> validated nested dataclasses.

Unknown keys anywhere are rejected with their dotted path.  ``--set
section.key=value`` overrides are parsed as TOML literals and applied before
validation.
"""

from __future__ import annotations

import copy
import dataclasses
import enum
import types
import typing
from dataclasses import dataclass, field, fields, is_dataclass
from pathlib import Path
from typing import Any, Sequence

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .calibration import BuyerCoeffs, SellerCoeffs
from .regimes import DEFAULT_CONSENT_PROB, DEFAULT_JOIN_PROB, RegimeConfig, RegimeKind


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class HotspotSpec:
    q: int
    r: int
    intensity: float = 1.0
    decay: float = 0.01


@dataclass(frozen=True)
class GridConfig:
    width: int = 20
    height: int = 25
    cell_radius_km: float = 20.0
    density_csv: str = ""
    density_floor: float = 0.26
    buyer_hotspots: list[HotspotSpec] = field(default_factory=lambda: [
        HotspotSpec(17, 4, 1.0, 0.012),
        HotspotSpec(15, 14, 0.8, 0.012),
        HotspotSpec(16, 21, 0.9, 0.012),
        HotspotSpec(6, 12, 0.4, 0.015),
    ])
    seller_hotspots: list[HotspotSpec] = field(default_factory=lambda: [
        HotspotSpec(16, 5, 1.0, 0.010),
        HotspotSpec(14, 15, 0.9, 0.010),
        HotspotSpec(15, 21, 0.8, 0.010),
        HotspotSpec(7, 11, 0.6, 0.012),
        HotspotSpec(3, 20, 0.4, 0.015),
    ])


@dataclass(frozen=True)
class AgentConfig:
    base_budget: float = 1e4
    top_budget: float = 1e7
    budget_bands: list[tuple[float, float]] = field(default_factory=list)
    initial_stock: float = 0.0
    pkg_min: float = 16.9
    pkg_max: float = 28.45
    level_step: float = 0.316


@dataclass(frozen=True)
class CoefficientsConfig:
    buyer: BuyerCoeffs = field(default_factory=BuyerCoeffs)
    seller: SellerCoeffs = field(default_factory=SellerCoeffs)


@dataclass(frozen=True)
class EnvConfig:
    gamma_r: float = 15.0
    gamma_e: float = 1.0
    window: int = 1
    t_e: int = 1
    scale_r: float | None = None
    cuts_r: tuple[float, float] | None = None
    scale_e: float | None = None
    cuts_e: tuple[float, float] | None = None


@dataclass(frozen=True)
class MarketConfig:
    connect_on_handshake: bool = False


@dataclass(frozen=True)
class RegimeEntry:
    kind: RegimeKind = RegimeKind.BASELINE
    share: float = 0.0
    consent_prob: float = DEFAULT_CONSENT_PROB
    join_prob: float = DEFAULT_JOIN_PROB
    platform_fee: float = 0.03
    sweep_share: bool = False

    def __post_init__(self):
        # same range checks as the runtime regime
        RegimeConfig(self.kind, self.share, self.consent_prob, self.join_prob, self.platform_fee)


@dataclass(frozen=True)
class PlanConfig:
    T: int = 100
    seeds: list[int] = field(default_factory=lambda: list(range(30)))
    share_grid: list[float] = field(default_factory=lambda: [round(0.1 * i, 1) for i in range(11)])


@dataclass(frozen=True)
class RunConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    agents: AgentConfig = field(default_factory=AgentConfig)
    coefficients: CoefficientsConfig = field(default_factory=CoefficientsConfig)
    env: EnvConfig = field(default_factory=EnvConfig)
    market: MarketConfig = field(default_factory=MarketConfig)
    regimes: list[RegimeEntry] = field(default_factory=lambda: [RegimeEntry()])
    plan: PlanConfig = field(default_factory=PlanConfig)


DOCS = {
    "grid.width": "lattice columns (axial q)",
    "grid.height": "lattice rows (axial r)",
    "grid.cell_radius_km": "hexagon circumradius; adjacent centroids are sqrt(3)*R apart",
    "grid.density_csv": "optional per-cell densities (cell_id,buyer_density,seller_density); empty = synthetic",
    "grid.density_floor": "synthetic densities below this are zeroed (empty cells)",
    "grid.buyer_hotspots": "list of {q, r, intensity, decay[1/km]} kernels for buyer density",
    "grid.seller_hotspots": "list of {q, r, intensity, decay[1/km]} kernels for seller density",
    "agents.base_budget": "lower edge of the level-1 budget band",
    "agents.top_budget": "lower edge of the level-5 budget band",
    "agents.budget_bands": "explicit [[lo, hi], ...] per level; overrides base/top when non-empty",
    "agents.initial_stock": "buyers' initial data stock",
    "agents.pkg_min": "seller package volume, log-uniform lower edge",
    "agents.pkg_max": "seller package volume, log-uniform upper edge",
    "agents.level_step": "package volume factor per seller level above 1",
    "coefficients.buyer.rho": "stock decay in f(x)=exp(-rho x)",
    "coefficients.buyer.beta": "utility per unit package volume",
    "coefficients.buyer.tau": "utility per seller tier",
    "coefficients.buyer.gamma": "utility per buyer tier (0 = reduced form)",
    "coefficients.buyer.phi": "seller x buyer tier interaction (0 = reduced form)",
    "coefficients.buyer.mu_alpha": "mean of raw buyer price coefficient",
    "coefficients.buyer.sigma_alpha": "sd of raw buyer price coefficient",
    "coefficients.buyer.kappa": "disutility per ln(1+km)",
    "coefficients.seller.c0": "fixed cost",
    "coefficients.seller.c1": "cost per seller tier (0 = reduced form)",
    "coefficients.seller.c2": "cost per unit package volume",
    "coefficients.seller.beta_r": "cost per risk class",
    "coefficients.seller.beta_e": "cost per enforcement class",
    "coefficients.seller.delta": "risk x enforcement cost (0 = reduced form)",
    "coefficients.seller.mu_alpha": "mean of raw seller price coefficient",
    "coefficients.seller.sigma_alpha": "sd of raw seller price coefficient",
    "env.gamma_r": "risk ordered-logit slope",
    "env.gamma_e": "enforcement ordered-logit slope",
    "env.window": "enforcement look-back window in periods",
    "env.t_e": "enforcement is redrawn when t is a multiple of t_e",
    "env.scale_r": "fixed risk scale (default: median positive package volume)",
    "env.cuts_r": "fixed risk cut points (default: P33/P67 of risk scores)",
    "env.scale_e": "fixed enforcement scale (default: median of first positive totals)",
    "env.cuts_e": "fixed enforcement cut points (default: P33/P67 each update)",
    "market.connect_on_handshake": "an accepted offer connects the pair even if the deal fails",
    "regimes": "list of regimes to run; see regimes.* keys",
    "regimes.kind": "Baseline | PME | LRCO | IC | RI | ShareRisk | ShareRiskEnforce",
    "regimes.share": "buyer liability share (ShareRisk, ShareRiskEnforce)",
    "regimes.consent_prob": "probability a seller holds consent (IC)",
    "regimes.join_prob": "probability a seller lists on the exchange (PME)",
    "regimes.platform_fee": "WTA markup for listed sellers (PME)",
    "regimes.sweep_share": "expand this regime over plan.share_grid",
    "plan.T": "periods per run",
    "plan.seeds": "master seeds",
    "plan.share_grid": "share values used by sweep_share regimes",
}


def _is_optional(tp) -> tuple[bool, Any]:
    origin = typing.get_origin(tp)
    if origin in (typing.Union, types.UnionType):
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        if len(args) == 1:
            return True, args[0]
    return False, tp


def _coerce(tp, value, path: str):
    optional, tp = _is_optional(tp)
    if value is None and optional:
        return None
    origin = typing.get_origin(tp)
    if is_dataclass(tp):
        return _build(tp, value, path)
    if origin is list:
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected a list, got {value!r}")
        (inner,) = typing.get_args(tp)
        return [_coerce(inner, v, f"{path}[{i}]") for i, v in enumerate(value)]
    if origin is tuple:
        args = typing.get_args(tp)
        if not isinstance(value, (list, tuple)) or len(value) != len(args):
            raise ConfigError(f"{path}: expected {len(args)} values, got {value!r}")
        return tuple(_coerce(a, v, f"{path}[{i}]") for i, (a, v) in enumerate(zip(args, value)))
    if isinstance(tp, type) and issubclass(tp, enum.Enum):
        try:
            return tp(value)
        except ValueError:
            choices = ", ".join(m.value for m in tp)
            raise ConfigError(f"{path}: {value!r} is not one of {choices}") from None
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    raise TypeError(f"unsupported config type {tp} at {path}")


def _build(cls, data, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected a table, got {data!r}")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        where = ", ".join(f"{path}.{k}" if path else k for k in unknown)
        raise ConfigError(f"unknown key(s): {where}")
    kwargs = {
        name: _coerce(hints[name], value, f"{path}.{name}" if path else name)
        for name, value in data.items()
    }
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path or 'config'}: {exc}") from None


def parse_override(item: str) -> tuple[list[str], Any]:
    if "=" not in item:
        raise ConfigError(f"override {item!r} must look like section.key=value")
    key, raw = item.split("=", 1)
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    return key.strip().split("."), value


def apply_overrides(data: dict, overrides: Sequence[str]) -> dict:
    data = copy.deepcopy(data)
    for item in overrides:
        keys, value = parse_override(item)
        node = data
        for k in keys[:-1]:
            node = node.setdefault(k, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {item!r}: {k} is not a table")
        node[keys[-1]] = value
    return data


def config_from_dict(data: dict, overrides: Sequence[str] = ()) -> RunConfig:
    return _build(RunConfig, apply_overrides(data, overrides), "")


def load_config(path: str | Path, overrides: Sequence[str] = ()) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(data, overrides)


def to_dict(cfg) -> Any:
    """Plain JSON-able echo of a config object."""
    if is_dataclass(cfg):
        return {f.name: to_dict(getattr(cfg, f.name)) for f in fields(cfg)}
    if isinstance(cfg, enum.Enum):
        return cfg.value
    if isinstance(cfg, (list, tuple)):
        return [to_dict(v) for v in cfg]
    return cfg


def reference_text() -> str:
    """Every config key with its default and meaning."""
    lines = ["# datamarket run configuration reference", ""]

    def walk(cls, prefix: str, default_obj):
        hints = typing.get_type_hints(cls)
        scalars, tables = [], []
        for f in fields(cls):
            tp = hints[f.name]
            dotted = f"{prefix}.{f.name}" if prefix else f.name
            value = getattr(default_obj, f.name)
            if is_dataclass(tp):
                tables.append((tp, dotted, value))
            else:
                scalars.append((dotted, f.name, value))
        if scalars:
            lines.append(f"[{prefix}]")
            for dotted, name, value in scalars:
                doc = DOCS.get(dotted, "")
                lines.append(f"{name} = {_fmt(value)}" + (f"  # {doc}" if doc else ""))
            lines.append("")
        for tp, dotted, value in tables:
            walk(tp, dotted, value)

    for f in fields(RunConfig):
        default = getattr(RunConfig(), f.name)
        if f.name == "regimes":
            lines.append("[[regimes]]  # " + DOCS["regimes"])
            for rf in fields(RegimeEntry):
                doc = DOCS.get(f"regimes.{rf.name}", "")
                lines.append(f"{rf.name} = {_fmt(getattr(RegimeEntry(), rf.name))}  # {doc}")
            lines.append("")
        else:
            walk(type(default), f.name, default)
    return "\n".join(lines)


def _fmt(value) -> str:
    value = to_dict(value)
    if value is None:
        return "<unset>"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return f'"{value}"'
    if isinstance(value, list) and value and isinstance(value[0], dict):
        return "[" + ", ".join(
            "{" + ", ".join(f"{k} = {_fmt(v)}" for k, v in d.items()) + "}" for d in value
        ) + "]"
    if isinstance(value, list):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    return repr(value)
