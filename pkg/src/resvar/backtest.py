"""Rolling-window backtest of the trading strategies.

For every evaluation day ``t`` and hour ``h`` the hour model is refitted on
the trailing ``calibration_days`` ending at ``t - 1``, a scenario fan is
simulated with seed ``cell_seed(master_seed, date(t).toordinal(), h)``, one
revenue distribution is computed and every configured strategy picks its
share from it. Hours are independent, so the driver fans out over hours;
results are reassembled in hour order and are identical for any worker
count.
"""
from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import BacktestAbort, EmptyLog, EstimationError, InsufficientHistory, UndefinedObjective
from .evaluation import (
    LOSS_KINDS,
    PValueMatrix,
    StrategyOutcome,
    aggregate_outcome,
    realized_revenue,
    pvalue_matrix,
    relative_to_benchmark,
)
from .market_data import HOURS, HourlyPanel, InformationSet, build_regressor_row
from .seeding import cell_seed
from .strategies import (
    ALL_STRATEGIES,
    DEFAULT_TAUS,
    Strategy,
    choose_g,
    default_grid,
    revenue_distribution,
)
from .svar import VarSpec, fit_hour_model, simulate_scenarios

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BacktestConfig:
    calibration_days: int = 731
    evaluation_days: int = 730
    strategies: Tuple[Strategy, ...] = ALL_STRATEGIES
    n_draws: int = 1000
    master_seed: int = 0
    g_grid: Optional[Tuple[float, ...]] = None
    taus: Tuple[float, ...] = DEFAULT_TAUS
    var_tau: float = 0.05
    var_spec: VarSpec = field(default_factory=VarSpec)
    info: InformationSet = field(default_factory=InformationSet)
    refit_every: int = 1
    threads: int = 1
    max_failure_rate: float = 0.01
    nw_lags: Optional[int] = None

    def __post_init__(self):
        strategies = tuple(Strategy.parse(s) for s in self.strategies)
        if not strategies:
            raise ValueError("at least one strategy is required")
        # canonical order, no duplicates
        strategies = tuple(s for s in ALL_STRATEGIES if s in strategies)
        object.__setattr__(self, "strategies", strategies)
        object.__setattr__(self, "taus", tuple(sorted(float(t) for t in self.taus)))
        if self.calibration_days < 200:
            raise ValueError(f"calibration_days must be at least 200, got {self.calibration_days}")
        if self.evaluation_days < 1:
            raise ValueError("evaluation_days must be positive")
        if self.refit_every < 1:
            raise ValueError("refit_every must be at least 1")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")
        if Strategy.MAX_VAR in strategies and not any(abs(t - self.var_tau) < 1e-12 for t in self.taus):
            raise ValueError(f"var_tau {self.var_tau} must be one of taus {self.taus}")

    @property
    def grid(self) -> np.ndarray:
        return default_grid() if self.g_grid is None else np.asarray(self.g_grid, dtype=float)

    def evaluation_range(self, panel: HourlyPanel) -> np.ndarray:
        start = panel.n_days - self.evaluation_days
        if start - self.calibration_days < 0:
            raise InsufficientHistory(
                f"panel has {panel.n_days} days; need {self.calibration_days} calibration + "
                f"{self.evaluation_days} evaluation days"
            )
        return np.arange(start, panel.n_days)

    def to_dict(self) -> dict:
        return {
            "calibration_days": self.calibration_days,
            "evaluation_days": self.evaluation_days,
            "strategies": [s.value for s in self.strategies],
            "n_draws": self.n_draws,
            "master_seed": self.master_seed,
            "g_grid": [float(g) for g in self.grid],
            "taus": list(self.taus),
            "var_tau": self.var_tau,
            "lags": list(self.var_spec.lags),
            "rho": self.var_spec.rho,
            "decision_hour": self.info.decision_hour,
            "known_actual_hours": sorted(self.info.known_actual_hours),
            "refit_every": self.refit_every,
            "max_failure_rate": self.max_failure_rate,
            "nw_lags": self.nw_lags,
        }


@dataclass
class HourResult:
    hour: int
    realized: Dict[Strategy, np.ndarray]
    predicted: Dict[Strategy, np.ndarray]
    g: Dict[Strategy, np.ndarray]
    sharpe: Dict[Strategy, np.ndarray]
    var5: Dict[Strategy, np.ndarray]
    y_point: np.ndarray
    g_hat: np.ndarray
    affine_error: np.ndarray
    failures: List[Tuple[int, str]]
    fallbacks: int = 0


def run_hour(panel: HourlyPanel, hour: int, config: BacktestConfig,
             eval_days: Optional[np.ndarray] = None) -> HourResult:
    """All evaluation days for one delivery hour."""
    days = config.evaluation_range(panel) if eval_days is None else np.asarray(eval_days)
    n = days.size
    grid = config.grid
    rho = config.var_spec.rho
    strategies = config.strategies
    out = {name: {s: np.empty(n) for s in strategies}
           for name in ("realized", "predicted", "g", "sharpe", "var5")}
    y_point = np.empty((n, 4))
    g_hat = np.empty(n)
    affine_error = np.empty(n)
    failures: List[Tuple[int, str]] = []
    fallbacks = 0
    model = None
    last_fit = None

    for i, t in enumerate(days):
        t = int(t)
        date = panel.dates[t].item()
        if model is None or last_fit is None or t - last_fit >= config.refit_every:
            window = (t - config.calibration_days, t - 1)
            try:
                model = fit_hour_model(panel, hour, window, config.var_spec, config.info)
                last_fit = t
            except (EstimationError, InsufficientHistory) as exc:
                failures.append((t, f"{type(exc).__name__}: {exc}"))
                if model is None:
                    raise BacktestAbort(f"{date} hour {hour}: no model available ({exc})") from exc
                logger.warning("%s hour %d: fit failed (%s); reusing previous model", date, hour, exc)

        try:
            row = build_regressor_row(panel, t, hour, config.info, config.var_spec.lags)
            y_hat = model.predict(row.x_row, row.y_lags)
            scen = simulate_scenarios(model, y_hat, config.n_draws,
                                      seed=cell_seed(config.master_seed, date.toordinal(), hour))
            dist = revenue_distribution(scen, grid, config.taus)
        except Exception as exc:
            raise BacktestAbort(f"{date} hour {hour}: {type(exc).__name__}: {exc}") from exc

        y_point[i] = y_hat
        g_hat[i] = scen.g_hat
        if grid.size > 1:
            slope = (dist.mean[-1] - dist.mean[0]) / (grid[-1] - grid[0])
            affine_error[i] = np.max(np.abs(dist.mean - dist.mean[0] - (grid - grid[0]) * slope))
        else:
            affine_error[i] = 0.0

        for s in strategies:
            try:
                dec = choose_g(dist, s, config.var_tau)
            except UndefinedObjective:
                fallbacks += 1
                dec = choose_g(dist, Strategy.MAX_PROFIT)
            out["realized"][s][i] = realized_revenue(panel, dec, t, hour, rho)
            out["predicted"][s][i] = dec.predicted_revenue
            out["g"][s][i] = dec.g_star
            out["sharpe"][s][i] = dec.sharpe_at_g
            out["var5"][s][i] = dec.var5_at_g

    return HourResult(hour=hour, y_point=y_point, g_hat=g_hat, affine_error=affine_error,
                      failures=failures, fallbacks=fallbacks, **out)


_WORKER_PANEL: Optional[HourlyPanel] = None


def _init_worker(panel):
    global _WORKER_PANEL
    _WORKER_PANEL = panel


def _worker(args):
    hour, config = args
    return run_hour(_WORKER_PANEL, hour, config)


def g_distribution(g) -> dict:
    """Summary of chosen shares in percentage points.

    ``g`` is the ``(T_eval, 24)`` grid of chosen shares (a 1-D log is
    accepted too, without the hourly profile).
    """
    g = np.asarray(g, dtype=float)
    if g.size == 0:
        raise EmptyLog("decision log is empty")
    out = {
        "mean_g": 100.0 * float(g.mean()),
        "share_g0": 100.0 * float(np.mean(g == 0.0)),
        "share_interior": 100.0 * float(np.mean((g > 0.0) & (g < 1.0))),
        "share_g1": 100.0 * float(np.mean(g == 1.0)),
    }
    out["hourly_means"] = (100.0 * g.mean(axis=0)).tolist() if g.ndim == 2 else None
    return out


def g_histogram(g, bins: int = 10) -> Tuple[np.ndarray, np.ndarray]:
    """Counts of interior shares ``0 < g < 1`` in equal-width bins."""
    g = np.asarray(g, dtype=float).ravel()
    edges = np.linspace(0.0, 1.0, bins + 1)
    counts, _ = np.histogram(g[(g > 0.0) & (g < 1.0)], bins=edges)
    return edges, counts


@dataclass
class BacktestReport:
    config: BacktestConfig
    dates: np.ndarray
    outcomes: Dict[str, StrategyOutcome]
    deltas: Dict[str, Dict[str, float]]
    benchmark: str
    pvalues: Dict[str, PValueMatrix]
    g_dist: Dict[str, dict]
    g_hist: Tuple[np.ndarray, Dict[str, np.ndarray]]
    failures: List[Tuple[str, int, str]]
    affine_error_max: float
    sharpe_fallbacks: int
    diagnostics: Dict[str, Dict[str, np.ndarray]] = field(default_factory=dict)
    runtime: dict = field(default_factory=dict)

    @property
    def n_cells(self) -> int:
        return sum(o.realized.size for o in self.outcomes.values())


def run_backtest(panel: HourlyPanel, config: Optional[BacktestConfig] = None) -> BacktestReport:
    """Run the full rolling-window experiment and aggregate the results."""
    config = config or BacktestConfig()
    days = config.evaluation_range(panel)
    started = time.perf_counter()
    hours = list(range(1, HOURS + 1))
    if config.threads == 1:
        results = [run_hour(panel, h, config, days) for h in hours]
    else:
        with ProcessPoolExecutor(max_workers=config.threads, initializer=_init_worker,
                                 initargs=(panel,)) as pool:
            results = list(pool.map(_worker, [(h, config) for h in hours]))
    elapsed = time.perf_counter() - started

    failures = sorted(
        (str(panel.dates[t]), r.hour, msg) for r in results for t, msg in r.failures
    )
    n_cells = days.size * HOURS
    if len(failures) > config.max_failure_rate * n_cells:
        raise BacktestAbort(
            f"{len(failures)} of {n_cells} cell fits failed (limit {config.max_failure_rate:.1%})"
        )

    def stack(key, s):
        return np.column_stack([getattr(r, key)[s] for r in results])

    outcomes = {}
    for s in config.strategies:
        outcomes[s.value] = aggregate_outcome(
            stack("realized", s), stack("predicted", s), stack("g", s), name=s.value
        )

    benchmark = Strategy.DA.value if Strategy.DA in config.strategies else config.strategies[0].value
    deltas = {
        name: relative_to_benchmark(o, outcomes[benchmark])
        for name, o in outcomes.items() if name != benchmark
    }
    pvalues = {}
    if len(outcomes) >= 2:
        ordered = list(outcomes.values())
        pvalues = {kind: pvalue_matrix(ordered, kind, config.nw_lags) for kind in LOSS_KINDS}
    g_dist = {name: g_distribution(o.g) for name, o in outcomes.items()}
    edges = None
    hist = {}
    for name, o in outcomes.items():
        edges, hist[name] = g_histogram(o.g)

    return BacktestReport(
        config=config,
        dates=panel.dates[days],
        outcomes=outcomes,
        deltas=deltas,
        benchmark=benchmark,
        pvalues=pvalues,
        g_dist=g_dist,
        g_hist=(edges, hist),
        failures=failures,
        affine_error_max=float(max(r.affine_error.max() for r in results)),
        sharpe_fallbacks=sum(r.fallbacks for r in results),
        diagnostics={
            s.value: {"sharpe": stack("sharpe", s), "var5": stack("var5", s)}
            for s in config.strategies
        },
        runtime={"elapsed_seconds": elapsed, "threads": config.threads},
    )
