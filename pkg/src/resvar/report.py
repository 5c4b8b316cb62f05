"""Writing and printing backtest reports.

Layout under the output directory::

    report_summary.csv     profit/risk table, nominal benchmark + %-deltas
    report_summary.json    the same plus g-distribution and metadata
    report_gshares.csv     mean g and shares at g = 0, 0 < g < 1, g = 1
    report_ghourly.csv     mean g per hour and strategy
    report_ghist.csv       histogram of interior g values
    report_decisions.csv   one row per (date, hour, strategy)
    report_pvalues.json    DM p-value matrices (revenue, squared, absolute)
    manifest.json          config hash, seed, versions, timing

Everything except ``manifest.json`` is a deterministic function of the
inputs and the master seed.
"""
from __future__ import annotations

import hashlib
import json
import platform
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict

import numpy as np
import pandas as pd

from .backtest import BacktestReport
from .evaluation import METRICS

PAYLOAD_FILES = (
    "report_summary.csv",
    "report_summary.json",
    "report_gshares.csv",
    "report_ghourly.csv",
    "report_ghist.csv",
    "report_decisions.csv",
    "report_pvalues.json",
)


def summary_dict(report: BacktestReport) -> dict:
    return {
        "benchmark": report.benchmark,
        "order": list(report.outcomes),
        "evaluation": {
            "first_date": str(report.dates[0]),
            "last_date": str(report.dates[-1]),
            "n_days": int(report.dates.size),
        },
        "strategies": {
            name: {
                "metrics": o.metrics(),
                "delta_pct": report.deltas.get(name),
                "g_distribution": report.g_dist[name],
            }
            for name, o in report.outcomes.items()
        },
        "failures": [list(f) for f in report.failures],
        "sharpe_fallbacks": report.sharpe_fallbacks,
        "affine_error_max": report.affine_error_max,
    }


def decisions_frame(report: BacktestReport) -> pd.DataFrame:
    names = list(report.outcomes)
    n_days = report.dates.size
    date = np.repeat(report.dates.astype(str), 24 * len(names))
    hour = np.tile(np.repeat(np.arange(1, 25), len(names)), n_days)
    strategy = np.tile(names, n_days * 24)

    def cells(attr):
        # day-major, then hour, then strategy
        return np.stack([getattr(report.outcomes[n], attr) for n in names], axis=-1).ravel()

    return pd.DataFrame({
        "date": date,
        "hour": hour,
        "strategy": strategy,
        "g_star": cells("g"),
        "predicted_revenue": cells("predicted"),
        "sharpe": np.stack([report.diagnostics[n]["sharpe"] for n in names], axis=-1).ravel(),
        "var5": np.stack([report.diagnostics[n]["var5"] for n in names], axis=-1).ravel(),
        "realized_revenue": cells("realized"),
    })


def _summary_frame(report: BacktestReport) -> pd.DataFrame:
    rows = []
    for name, o in report.outcomes.items():
        row = {"strategy": name}
        row.update(o.metrics())
        delta = report.deltas.get(name) or {}
        for m in METRICS:
            row[f"delta_pct_{m}"] = delta.get(m, np.nan)
        rows.append(row)
    return pd.DataFrame(rows)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def config_hash(config_dict: dict) -> str:
    blob = json.dumps(config_dict, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def write_report(report: BacktestReport, outdir, extra_manifest: Dict = None) -> Path:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    _summary_frame(report).to_csv(out / "report_summary.csv", index=False)
    with open(out / "report_summary.json", "w") as fh:
        json.dump(summary_dict(report), fh, indent=1, sort_keys=True)

    gshares = pd.DataFrame([
        {"strategy": n, **{k: v for k, v in d.items() if k != "hourly_means"}}
        for n, d in report.g_dist.items()
    ])
    gshares.to_csv(out / "report_gshares.csv", index=False)
    hourly = pd.DataFrame({"hour": np.arange(1, 25)})
    for n, d in report.g_dist.items():
        hourly[n] = d["hourly_means"]
    hourly.to_csv(out / "report_ghourly.csv", index=False)
    edges, counts = report.g_hist
    hist = pd.DataFrame({"bin_lo": edges[:-1], "bin_hi": edges[1:]})
    for n, c in counts.items():
        hist[n] = c
    hist.to_csv(out / "report_ghist.csv", index=False)
    decisions_frame(report).to_csv(out / "report_decisions.csv", index=False)
    with open(out / "report_pvalues.json", "w") as fh:
        json.dump({k: m.to_json() for k, m in report.pvalues.items()}, fh, indent=1, sort_keys=True)

    from . import __version__

    config = report.config.to_dict()
    manifest = {
        "config": config,
        "config_hash": config_hash(config),
        "master_seed": report.config.master_seed,
        "versions": {
            "resvar": __version__,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "pandas": pd.__version__,
            "platform": platform.platform(),
        },
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "runtime": report.runtime,
        "files": {name: _sha256(out / name) for name in PAYLOAD_FILES},
    }
    if extra_manifest:
        manifest.update(extra_manifest)
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
    return out


def format_profit_table(summary: dict) -> str:
    """Benchmark in levels, other strategies as %-differences."""
    bench = summary["benchmark"]
    cols = ("mean_revenue", "rmse", "mae", "var_1pct", "var_5pct")
    head = f"{'Strategy':<10}" + "".join(f"{c:>14}" for c in cols)
    lines = [head, "-" * len(head)]
    strategies = summary["strategies"]
    m = strategies[bench]["metrics"]
    lines.append(f"{bench:<10}" + "".join(f"{m[c]:>14.1f}" for c in cols))
    lines.append(f"{'':<10}{'%-difference vs ' + bench:>{14 * len(cols)}}")
    for name in summary.get("order", list(strategies)):
        if name == bench:
            continue
        d = strategies[name]["delta_pct"]
        lines.append(f"{name:<10}" + "".join(f"{d[c]:>14.2f}" for c in cols))
    return "\n".join(lines)


def format_g_table(summary: dict) -> str:
    cols = ("mean_g", "share_g0", "share_interior", "share_g1")
    head = f"{'Strategy':<10}" + "".join(f"{c:>16}" for c in cols)
    lines = [head, "-" * len(head)]
    for name in summary.get("order", list(summary["strategies"])):
        g = summary["strategies"][name]["g_distribution"]
        lines.append(f"{name:<10}" + "".join(f"{g[c]:>16.2f}" for c in cols))
    return "\n".join(lines)


def format_descriptive(stats: dict) -> str:
    labels = list(stats)
    lines = [f"{'':<8}" + "".join(f"{lab:>10}" for lab in labels)]
    lines.append(f"{'Mean':<8}" + "".join(f"{stats[l]['mean']:>10.2f}" for l in labels))
    lines.append(f"{'St.Dev':<8}" + "".join(f"{stats[l]['std']:>10.2f}" for l in labels))
    lines.append(f"{'ADF':<8}" + "".join(f"{stats[l]['adf_reject_count']:>10d}" for l in labels))
    return "\n".join(lines)
