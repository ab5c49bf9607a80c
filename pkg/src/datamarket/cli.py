"""Command-line driver: run, analyze, export-arcs, print-config-reference."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import pandas as pd

from .analysis import EstimationError, binned_means, estimate_table, regime_dummies
from .arcs import trade_arcs, write_arcs
from .config import ConfigError, RunConfig, config_from_dict, load_config, reference_text
from .experiments import PRESETS, build_world, plan_from_config, preset_plan, run_grid
from .metrics import OUTCOMES

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 2, 3

log = logging.getLogger("datamarket")


class UsageError(Exception):
    """Bad input the user can fix: exit code 2."""


def _config(path: str | None, overrides: list[str]) -> RunConfig:
    if path is None:
        return config_from_dict({}, overrides)
    return load_config(path, overrides)


def cmd_run(args) -> int:
    cfg = _config(args.config, args.set)
    plan = preset_plan(args.preset, cfg) if args.preset else plan_from_config(cfg)

    def report(s):
        print(f"seed={s.seed} regime={s.label} trades={s.trades} welfare={s.welfare:.4f}", flush=True)

    res = run_grid(plan, args.out, on_run=report)
    print(
        f"wrote {len(res.panel)} panel rows to {Path(args.out) / 'panel_all.csv'} "
        f"({res.meta['wall_time_s']:.1f}s, on-exchange share {res.on_exchange_share:.4f})"
    )
    return EXIT_OK


def _read_csv(path: str, what: str) -> pd.DataFrame:
    try:
        return pd.read_csv(path)
    except FileNotFoundError:
        raise UsageError(f"{what} not found: {path}") from None
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise UsageError(f"{what} {path} is not a readable CSV: {exc}") from None


def _check_columns(panel: pd.DataFrame, names, what: str) -> None:
    missing = [c for c in names if c not in panel.columns]
    if missing:
        raise UsageError(
            f"unknown {what}: {', '.join(missing)}; available columns: {', '.join(panel.columns)}"
        )


def cmd_analyze(args) -> int:
    panel = _read_csv(args.panel, "panel")
    _check_columns(panel, ["seed", "t"], "column")
    if args.regime:
        _check_columns(panel, ["regime"], "column")
        panel = panel[panel["regime"].isin(args.regime)]
        if panel.empty:
            raise UsageError(f"no rows with regime in {args.regime}")
    outcomes = args.outcomes or [o for o in OUTCOMES if o in panel.columns]
    _check_columns(panel, outcomes, "outcome column")

    # treatments name either panel columns (e.g. share) or regime labels
    labels = set(panel["regime"].astype(str)) if "regime" in panel.columns else set()
    dummies = [t for t in args.treatments if t not in panel.columns and t in labels]
    unknown = [t for t in args.treatments if t not in panel.columns and t not in labels]
    if unknown:
        listing = ", ".join(panel.columns)
        regimes = ", ".join(sorted(labels)) or "none"
        raise UsageError(
            f"unknown treatment(s): {', '.join(unknown)}; columns: {listing}; regime labels: {regimes}"
        )
    if dummies:
        panel = regime_dummies(panel, dummies)

    table = estimate_table(panel, outcomes, args.treatments)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(out, index=False)
    for row in table.itertuples(index=False):
        print(f"{row.outcome:15s} {row.regressor:18s} coef={row.coef: .4f} se={row.se:.4f} t={row.t: .2f}")
    if args.binned:
        _check_columns(panel, [args.binned_by], "column")
        binned_means(panel, args.binned_by, outcomes).to_csv(args.binned, index=False)
    return EXIT_OK


def cmd_export_arcs(args) -> int:
    cfg = _config(args.config, args.set)
    trades = _read_csv(args.trades, "trade log")
    _check_columns(trades, ["t", "cell_b", "cell_s", "volume", "price", "regime", "on_exchange"], "column")
    grid = build_world(cfg)
    collection = trade_arcs(trades, grid, args.t_min, args.t_max)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_arcs(out, collection)
    print(f"wrote {len(collection['features'])} arcs to {out}")
    return EXIT_OK


def cmd_reference(args) -> int:
    sys.stdout.write(reference_text())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="datamarket", description="Spatial data-market simulator.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def config_args(sp):
        sp.add_argument("--config", help="TOML run configuration (defaults if omitted)")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key, e.g. plan.T=5 (repeatable)")

    r = sub.add_parser("run", help="simulate every seed x regime and write panels")
    config_args(r)
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--preset", choices=sorted(PRESETS), help="regime set shaped like a regression table")
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("analyze", help="two-way fixed-effects estimates from a panel")
    a.add_argument("--panel", required=True, help="panel CSV (e.g. panel_all.csv)")
    a.add_argument("--treatments", nargs="+", required=True,
                   help="regressor columns (e.g. share) or regime labels turned into dummies")
    a.add_argument("--outcomes", nargs="+", help=f"outcome columns (default: {' '.join(OUTCOMES)})")
    a.add_argument("--regime", nargs="+", help="keep only rows with these regime labels")
    a.add_argument("--out", default="estimates.csv", help="estimates CSV path")
    a.add_argument("--binned", help="also write per-value means to this CSV")
    a.add_argument("--binned-by", default="share", help="column to bin on (default share)")
    a.set_defaults(func=cmd_analyze)

    e = sub.add_parser("export-arcs", help="trade log to GeoJSON LineStrings")
    config_args(e)
    e.add_argument("--trades", required=True, help="trades.csv from a run")
    e.add_argument("--t-min", type=int, help="keep deals with t >= T_MIN")
    e.add_argument("--t-max", type=int, help="keep deals with t <= T_MAX")
    e.add_argument("--out", required=True, help="GeoJSON output path")
    e.set_defaults(func=cmd_export_arcs)

    ref = sub.add_parser("print-config-reference", help="print every config key with its default")
    ref.set_defaults(func=cmd_reference)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, UsageError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except (EstimationError, ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
