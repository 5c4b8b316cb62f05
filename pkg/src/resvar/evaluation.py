"""Realised revenue, aggregate profit/risk measures and Diebold-Mariano
comparisons between strategies."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.stats import norm

from .errors import (
    DegenerateDifferential,
    IncompleteGrid,
    MissingActuals,
    ZeroBenchmark,
)
from .market_data import HOURS, HourlyPanel
from .strategies import StrategyDecision

LOSS_KINDS = ("revenue", "squared_error", "absolute_error")
METRICS = ("mean_revenue", "rmse", "mae", "var_1pct", "var_5pct")


def realized_revenue(panel: HourlyPanel, decision: StrategyDecision, t: int, h: int,
                     rho: float = 0.005) -> float:
    """Revenue actually earned in cell ``(t, h)``.

    The day-ahead volume ``g * G_hat`` uses the decision-time forecast; the
    realised generation ``rho * RES * 1000`` settles the rest intraday (a
    negative remainder is a buy-back).
    """
    if not (0 <= t < panel.n_days and 1 <= h <= HOURS):
        raise MissingActuals(f"no actuals for day index {t}, hour {h}")
    da = panel.da_price[t, h - 1]
    idp = panel.id3_price[t, h - 1]
    res = panel.res_actual[t, h - 1]
    if not np.isfinite([da, idp, res]).all():
        raise MissingActuals(f"actuals missing for day index {t}, hour {h}")
    offered = decision.g_star * decision.g_hat
    return float(offered * da + (rho * 1000.0 * res - offered) * idp)


@dataclass(frozen=True)
class StrategyOutcome:
    """Per-cell results of one strategy plus its aggregates.

    Cell arrays are ``(T_eval, 24)``.
    """

    name: str
    realized: np.ndarray
    predicted: np.ndarray
    g: Optional[np.ndarray]
    mean_revenue: float
    rmse: float
    mae: float
    var_1pct: float
    var_5pct: float

    @property
    def errors(self) -> np.ndarray:
        return self.realized - self.predicted

    @property
    def n_days(self) -> int:
        return self.realized.shape[0]

    def metrics(self) -> Dict[str, float]:
        return {m: getattr(self, m) for m in METRICS}


def _hourly_var(realized: np.ndarray, tau: float) -> float:
    return float(np.quantile(realized, tau, axis=0, method="linear").mean())


def aggregate_outcome(realized, predicted, g=None, name: str = "") -> StrategyOutcome:
    """Average revenue, RMSE/MAE of the revenue forecast and hour-averaged
    VaR at 1% and 5% over a complete ``(T_eval, 24)`` grid."""
    realized = np.asarray(realized, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    if realized.ndim != 2 or realized.shape[1] != HOURS or realized.shape[0] == 0:
        raise IncompleteGrid(f"expected a (T_eval, 24) grid, got {realized.shape}")
    if predicted.shape != realized.shape:
        raise IncompleteGrid("realized and predicted grids differ in shape")
    if not (np.isfinite(realized).all() and np.isfinite(predicted).all()):
        raise IncompleteGrid("grid has missing cells")
    err = realized - predicted
    return StrategyOutcome(
        name=name,
        realized=realized,
        predicted=predicted,
        g=None if g is None else np.asarray(g, dtype=float),
        mean_revenue=float(realized.mean()),
        rmse=float(np.sqrt(np.mean(err ** 2))),
        mae=float(np.mean(np.abs(err))),
        var_1pct=_hourly_var(realized, 0.01),
        var_5pct=_hourly_var(realized, 0.05),
    )


def relative_to_benchmark(outcome: StrategyOutcome, benchmark: StrategyOutcome) -> Dict[str, float]:
    """Percentage difference ``100 (m - m_bench) / |m_bench|`` per metric."""
    if outcome.realized.shape != benchmark.realized.shape:
        raise IncompleteGrid("outcome and benchmark cover different grids")
    out = {}
    for m in METRICS:
        ref = getattr(benchmark, m)
        if ref == 0:
            raise ZeroBenchmark(f"benchmark {m} is zero")
        out[m] = 100.0 * (getattr(outcome, m) - ref) / abs(ref)
    return out


@dataclass(frozen=True)
class DmResult:
    statistic: float
    p_value: float
    loss_kind: str
    n_days: int


def bartlett_long_run_variance(d: np.ndarray, lags: Optional[int] = None) -> float:
    """Newey-West long-run variance (``2 pi f(0)``) with Bartlett weights.

    ``lags`` defaults to ``floor(T ** (1/3))``; ``lags=0`` gives the plain
    (1/T) sample variance.
    """
    d = np.asarray(d, dtype=float)
    n = d.size
    if lags is None:
        lags = int(math.floor(n ** (1.0 / 3.0) + 1e-12))
    dc = d - d.mean()
    lrv = dc @ dc / n
    for k in range(1, min(lags, n - 1) + 1):
        w = 1.0 - k / (lags + 1.0)
        lrv += 2.0 * w * (dc[k:] @ dc[:-k]) / n
    return float(lrv)


def daily_differential(loss_i, loss_j, kind: str) -> np.ndarray:
    a = np.asarray(loss_i, dtype=float)
    b = np.asarray(loss_j, dtype=float)
    if a.shape != b.shape:
        raise IncompleteGrid(f"loss grids differ in shape: {a.shape} vs {b.shape}")
    if kind == "revenue":
        d = a - b
    elif kind == "squared_error":
        d = a ** 2 - b ** 2
    elif kind == "absolute_error":
        d = np.abs(a) - np.abs(b)
    else:
        raise ValueError(f"unknown loss kind {kind!r}; expected one of {LOSS_KINDS}")
    return d.mean(axis=1) if d.ndim == 2 else d


def dm_test(loss_i, loss_j, kind: str = "revenue", nw_lags: Optional[int] = None) -> DmResult:
    """Diebold-Mariano test on daily means of the differential.

    For ``revenue`` the inputs are revenues and ``d = pi_i - pi_j``; for the
    error kinds the inputs are forecast errors and ``d`` is
    ``u_i**2 - u_j**2`` or ``|u_i| - |u_j|``. The p-value is the upper tail
    ``1 - Phi(DM)``, i.e. evidence that ``E d > 0``.
    """
    d = daily_differential(loss_i, loss_j, kind)
    n = d.size
    if n < 30:
        raise ValueError(f"DM test needs at least 30 days, got {n}")
    if not np.any(d):
        raise DegenerateDifferential("loss series are identical", identical=True)
    lrv = bartlett_long_run_variance(d, nw_lags)
    if not lrv > 0:
        raise DegenerateDifferential("differential has zero long-run variance")
    stat = float(d.mean() / math.sqrt(lrv / n))
    return DmResult(statistic=stat, p_value=float(norm.sf(stat)), loss_kind=kind, n_days=n)


@dataclass(frozen=True)
class PValueMatrix:
    """Entry ``(i, j)`` is the one-sided p-value that strategy ``i`` beats
    ``j``. ``status`` is "" for a computed cell, "identical" or
    "degenerate" otherwise; the diagonal is empty."""

    kind: str
    names: List[str]
    p_values: np.ndarray
    statistics: np.ndarray
    status: List[List[str]]

    def to_json(self) -> dict:
        rows = []
        for i in range(len(self.names)):
            row = []
            for j in range(len(self.names)):
                if i == j:
                    row.append(None)
                elif self.status[i][j]:
                    row.append(self.status[i][j])
                else:
                    row.append(float(self.p_values[i, j]))
            rows.append(row)
        return {"kind": self.kind, "strategies": list(self.names), "p_values": rows}


def pvalue_matrix(outcomes: Sequence[StrategyOutcome], kind: str = "revenue",
                  nw_lags: Optional[int] = None) -> PValueMatrix:
    """Pairwise DM p-values; "beats" means higher revenue or lower loss."""
    if len(outcomes) < 2:
        raise ValueError("need at least two strategies")
    n = len(outcomes)
    p = np.full((n, n), np.nan)
    stat = np.full((n, n), np.nan)
    status = [[""] * n for _ in range(n)]
    for i, oi in enumerate(outcomes):
        for j, oj in enumerate(outcomes):
            if i == j:
                continue
            try:
                if kind == "revenue":
                    res = dm_test(oi.realized, oj.realized, kind, nw_lags)
                else:
                    # lower loss for i <=> positive loss_j - loss_i
                    res = dm_test(oj.errors, oi.errors, kind, nw_lags)
            except DegenerateDifferential as exc:
                status[i][j] = "identical" if exc.identical else "degenerate"
                continue
            p[i, j] = res.p_value
            stat[i, j] = res.statistic
    return PValueMatrix(kind=kind, names=[o.name for o in outcomes], p_values=p,
                        statistics=stat, status=status)
