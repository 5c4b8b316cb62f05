"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 backtest
aborted.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .backtest import run_backtest
from .config import ConfigError, RunConfig, load_config, with_overrides
from .errors import BacktestAbort, DataError, InsufficientHistory, ResvarError, UnstableTruth
from .market_data import descriptive_stats, load_panel, write_panel
from .report import format_descriptive, format_g_table, format_profit_table, write_report
from .synthgen import GroundTruth, default_truth, generate_panel, mean_preserving_spread_truth

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_ABORT = 0, 1, 2, 3

log = logging.getLogger("resvar")


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    return with_overrides(
        cfg,
        data=getattr(args, "data", None),
        seed=getattr(args, "seed", None),
        threads=getattr(args, "threads", None),
        strategies=getattr(args, "strategies", None),
        draws=getattr(args, "draws", None),
        out=getattr(args, "out", None),
    )


def _data_path(cfg: RunConfig) -> Path:
    if cfg.data_path is None:
        raise ConfigError("no data path given (config data.path or --data)")
    if not cfg.data_path.is_file():
        raise ConfigError(f"data file not found: {cfg.data_path}")
    return cfg.data_path


def cmd_validate(args) -> int:
    cfg = _config(args)
    _setup_logging(cfg.log_level)
    path = _data_path(cfg)
    panel = load_panel(path, cfg.mapping)
    stats = descriptive_stats(panel)
    print(f"panel {panel.start_date} .. {panel.end_date}: {panel.n_days} days x 24 hours, "
          f"{panel.n_imputed} interpolated cells")
    print(format_descriptive(stats))
    return EXIT_OK


def cmd_backtest(args) -> int:
    cfg = _config(args)
    _setup_logging(cfg.log_level)
    panel = load_panel(_data_path(cfg), cfg.mapping)
    report = run_backtest(panel, cfg.backtest)
    out = write_report(report, cfg.outdir, {"data_path": str(cfg.data_path)})
    _print_summary(out)
    print(f"report written to {out}")
    return EXIT_OK


def cmd_synth(args) -> int:
    cfg = load_config(args.config) if args.config else RunConfig()
    _setup_logging(cfg.log_level)
    synth = dict(cfg.synth)
    truth_spec = args.truth or synth.get("truth", "default")
    n_days = args.days if args.days is not None else int(synth.get("n_days", 1461))
    seed = args.seed if args.seed is not None else int(synth.get("seed", 0))
    out = args.out or synth.get("output", "panel.csv")
    if n_days < 100:
        raise ConfigError(f"n_days must be at least 100, got {n_days}")
    if truth_spec == "default":
        truth = default_truth()
    elif truth_spec == "spread":
        truth = mean_preserving_spread_truth()
    else:
        try:
            truth = GroundTruth.load(cfg.base_dir / truth_spec if args.config else truth_spec)
        except (OSError, KeyError, ValueError) as exc:
            raise ConfigError(f"cannot read truth file {truth_spec}: {exc}") from exc
    panel = generate_panel(truth, n_days=n_days, seed=seed)
    write_panel(panel, out, cfg.mapping)
    if args.write_truth:
        truth.save(args.write_truth)
    print(f"wrote {panel.n_days} days ({panel.start_date} .. {panel.end_date}) to {out}")
    return EXIT_OK


def _print_summary(outdir: Path) -> None:
    summary = json.loads((Path(outdir) / "report_summary.json").read_text())
    print("Average hourly revenue and risk (EUR)")
    print(format_profit_table(summary))
    print()
    print("Share of expected generation offered day-ahead (% points)")
    print(format_g_table(summary))


def cmd_report(args) -> int:
    outdir = Path(args.out)
    if not (outdir / "report_summary.json").is_file():
        raise ConfigError(f"no report found in {outdir}")
    _print_summary(outdir)
    pvals = json.loads((outdir / "report_pvalues.json").read_text())
    for kind, mat in pvals.items():
        print()
        print(f"DM p-values ({kind}); row beats column")
        names = mat["strategies"]
        print(f"{'':<10}" + "".join(f"{n:>11}" for n in names))
        for name, row in zip(names, mat["p_values"]):
            cells = []
            for v in row:
                cells.append("-" if v is None else (v if isinstance(v, str) else f"{v:.4f}"))
            print(f"{name:<10}" + "".join(f"{c:>11}" for c in cells))
    return EXIT_OK


def _setup_logging(level: str) -> None:
    logging.basicConfig(level=getattr(logging, level, logging.INFO),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="resvar", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=True):
        p.add_argument("--config", help="YAML run configuration")
        if data:
            p.add_argument("--data", help="panel CSV (overrides data.path)")

    p = sub.add_parser("validate", help="load a panel and print descriptive statistics")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("backtest", help="run the rolling-window backtest")
    common(p)
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--threads", type=int, help="worker processes")
    p.add_argument("--strategies", help="comma list, e.g. da,id,maxsharpe")
    p.add_argument("--draws", type=int, help="bootstrap draws per cell")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("synth", help="write a synthetic panel CSV")
    common(p, data=False)
    p.add_argument("--truth", help="'default', 'spread' or a ground-truth JSON file")
    p.add_argument("--days", type=int, help="number of days (>= 100)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output CSV path")
    p.add_argument("--write-truth", help="also save the ground truth as JSON")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("report", help="print the tables of an existing report")
    p.add_argument("--out", required=True, help="report directory")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UnstableTruth as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BacktestAbort as exc:
        print(f"backtest aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except (DataError, InsufficientHistory, ResvarError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
