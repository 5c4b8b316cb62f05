"""Run configuration: one YAML file with a section per module, plus
command-line overrides (flags win).

Example::

    data:
      path: panel.csv            # relative to this file
      timezone: Europe/Berlin
      columns: {timestamp: time, id3_price: id3}
    model:
      lags: [1, 2, 7]
      rho: 0.005
    information:
      decision_hour: 12
      known_actual_hours: [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]
    backtest:
      calibration_days: 731
      evaluation_days: 730
      strategies: [DA, ID, MaxProfit, MaxSharpe, MaxVaR]
      n_draws: 1000
      master_seed: 0
      g_step: 0.01
      taus: [0.01, 0.05]
      refit_every: 1
    output:
      dir: out
      threads: 1
    log_level: INFO
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import yaml

from .backtest import BacktestConfig
from .errors import ResvarError
from .market_data import ColumnMapping, InformationSet
from .strategies import default_grid
from .svar import VarSpec

SECTIONS = {"data", "model", "information", "backtest", "output", "synth", "log_level"}


class ConfigError(ResvarError):
    pass


@dataclass(frozen=True)
class RunConfig:
    data_path: Optional[Path] = None
    mapping: ColumnMapping = field(default_factory=ColumnMapping)
    backtest: BacktestConfig = field(default_factory=BacktestConfig)
    outdir: Path = Path("out")
    log_level: str = "INFO"
    synth: dict = field(default_factory=dict)
    base_dir: Path = Path(".")


def _section(raw: dict, name: str) -> dict:
    value = raw.get(name) or {}
    if not isinstance(value, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    return dict(value)


def parse_config(raw: Optional[dict], base_dir=".") -> RunConfig:
    """Build a RunConfig from an already-loaded mapping."""
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError("config file must contain a mapping at top level")
    unknown = set(raw) - SECTIONS
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    base = Path(base_dir)
    try:
        data = _section(raw, "data")
        columns = dict(data.pop("columns", {}) or {})
        for key in ("timezone", "timestamp_format"):
            if key in data:
                columns[key] = data.pop(key)
        path = data.pop("path", None)
        if data:
            raise ConfigError(f"unknown keys in data section: {sorted(data)}")
        mapping = ColumnMapping.from_dict(columns)

        model = _section(raw, "model")
        spec = VarSpec(**model)
        info_raw = _section(raw, "information")
        if "known_actual_hours" in info_raw:
            info_raw["known_actual_hours"] = frozenset(info_raw["known_actual_hours"])
        info = InformationSet(**info_raw)

        bt = _section(raw, "backtest")
        step = bt.pop("g_step", None)
        if step is not None:
            if not 0 < float(step) <= 1:
                raise ConfigError(f"g_step must lie in (0, 1], got {step}")
            bt["g_grid"] = tuple(default_grid(float(step)))
        for key in ("taus", "strategies"):
            if key in bt:
                bt[key] = tuple(bt[key])
        output = _section(raw, "output")
        threads = int(output.pop("threads", 1))
        outdir = Path(output.pop("dir", "out"))
        if output:
            raise ConfigError(f"unknown keys in output section: {sorted(output)}")
        backtest = BacktestConfig(var_spec=spec, info=info, threads=threads, **bt)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc

    data_path = None
    if path is not None:
        data_path = Path(path)
        if not data_path.is_absolute():
            data_path = base / data_path
    level = str(raw.get("log_level", "INFO")).upper()
    if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
        raise ConfigError(f"invalid log_level {level!r}")
    return RunConfig(
        data_path=data_path,
        mapping=mapping,
        backtest=backtest,
        outdir=outdir if outdir.is_absolute() else base / outdir,
        log_level=level,
        synth=_section(raw, "synth"),
        base_dir=base,
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return parse_config(raw, base_dir=path.parent)


def with_overrides(cfg: RunConfig, *, data=None, seed=None, threads=None, strategies=None,
                   draws=None, out=None) -> RunConfig:
    bt = {}
    if seed is not None:
        bt["master_seed"] = int(seed)
    if threads is not None:
        bt["threads"] = int(threads)
    if strategies is not None:
        bt["strategies"] = tuple(s for s in strategies.split(",") if s.strip())
    if draws is not None:
        bt["n_draws"] = int(draws)
    try:
        backtest = replace(cfg.backtest, **bt) if bt else cfg.backtest
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    changes = {"backtest": backtest}
    if data is not None:
        changes["data_path"] = Path(data)
    if out is not None:
        changes["outdir"] = Path(out)
    return replace(cfg, **changes)
