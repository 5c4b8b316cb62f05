"""Revenue distributions over the day-ahead share ``g`` and the five
trading strategies that pick ``g`` from them.

Revenue for a draw, with volumes in MWh and prices in EUR/MWh::

    pi(g) = g * G_hat * DA + (G - g * G_hat) * ID
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np

from .errors import EmptyGrid, GOutOfRange, UndefinedObjective
from .svar import ScenarioSet

DEFAULT_TAUS = (0.01, 0.05)


def default_grid(step: float = 0.01) -> np.ndarray:
    n = int(round(1.0 / step))
    return np.linspace(0.0, 1.0, n + 1)


class Strategy(str, enum.Enum):
    DA = "DA"
    ID = "ID"
    MAX_PROFIT = "MaxProfit"
    MAX_SHARPE = "MaxSharpe"
    MAX_VAR = "MaxVaR"

    @classmethod
    def parse(cls, value) -> "Strategy":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "").replace("-", "")
        aliases = {
            "da": cls.DA, "id": cls.ID,
            "maxprofit": cls.MAX_PROFIT, "profit": cls.MAX_PROFIT, "epi": cls.MAX_PROFIT,
            "maxsharpe": cls.MAX_SHARPE, "sharpe": cls.MAX_SHARPE, "sr": cls.MAX_SHARPE,
            "maxvar": cls.MAX_VAR, "var": cls.MAX_VAR,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown strategy {value!r}") from None


ALL_STRATEGIES = tuple(Strategy)


@dataclass(frozen=True)
class RevenueDistribution:
    """Moments and quantiles of simulated revenue at every grid point (EUR).

    ``sharpe`` is NaN where ``std`` is zero.
    """

    g_grid: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    sharpe: np.ndarray
    var_tau: Dict[float, np.ndarray]
    g_hat: float = 0.0
    draws: Optional[np.ndarray] = field(default=None, repr=False)


@dataclass(frozen=True)
class StrategyDecision:
    strategy: Strategy
    g_star: float
    predicted_revenue: float
    g_hat: float
    sharpe_at_g: float
    var5_at_g: float


def revenue_draws(scen: ScenarioSet, g: float) -> np.ndarray:
    """Per-draw revenue for a single share ``g``."""
    if not 0.0 <= g <= 1.0:
        raise GOutOfRange(f"g must lie in [0, 1], got {g}")
    offered = g * scen.g_hat
    return offered * scen.da_draws + (scen.g_draws - offered) * scen.id_draws


def revenue_distribution(scen: ScenarioSet, g_grid=None, taus: Sequence[float] = DEFAULT_TAUS,
                         keep_draws: bool = False) -> RevenueDistribution:
    """Mean, population standard deviation, Sharpe ratio and empirical
    ``tau``-quantiles (linear interpolation between order statistics) of
    revenue across draws, for every ``g`` on the grid."""
    grid = default_grid() if g_grid is None else np.asarray(g_grid, dtype=float)
    if grid.size == 0:
        raise EmptyGrid("g grid is empty")
    if grid.min() < 0.0 or grid.max() > 1.0:
        raise GOutOfRange("g grid must lie inside [0, 1]")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("g grid must be sorted and free of duplicates")

    base = scen.g_draws * scen.id_draws
    spread = scen.g_hat * (scen.da_draws - scen.id_draws)
    # revenue is affine in g: base + g * spread
    draws = base[:, None] + spread[:, None] * grid[None, :]
    mean = base.mean() + grid * spread.mean()
    std = draws.std(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        sharpe = np.where(std > 0, mean / np.where(std > 0, std, 1.0), np.nan)
    taus = tuple(sorted(float(t) for t in taus))
    quantiles = np.quantile(draws, taus, axis=0, method="linear") if taus else []
    var_tau = {tau: q for tau, q in zip(taus, quantiles)}
    return RevenueDistribution(
        g_grid=grid,
        mean=mean,
        std=std,
        sharpe=sharpe,
        var_tau=var_tau,
        g_hat=scen.g_hat,
        draws=draws if keep_draws else None,
    )


def _grid_index(grid: np.ndarray, g: float) -> int:
    hits = np.flatnonzero(np.isclose(grid, g, rtol=0.0, atol=1e-12))
    if hits.size == 0:
        raise ValueError(f"g = {g} is not on the grid")
    return int(hits[0])


def choose_g(dist: RevenueDistribution, strategy, tau: float = 0.05) -> StrategyDecision:
    """Pick ``g`` for a strategy; ties go to the smallest ``g``.

    MaxSharpe ignores grid points where the standard deviation is zero and
    raises UndefinedObjective when every point is degenerate.
    """
    strategy = Strategy.parse(strategy)
    grid = dist.g_grid
    if grid.size == 0:
        raise EmptyGrid("distribution has an empty grid")
    if strategy is Strategy.DA:
        i = _grid_index(grid, 1.0)
    elif strategy is Strategy.ID:
        i = _grid_index(grid, 0.0)
    elif strategy is Strategy.MAX_PROFIT:
        i = int(np.argmax(dist.mean))
    elif strategy is Strategy.MAX_SHARPE:
        if np.all(np.isnan(dist.sharpe)):
            raise UndefinedObjective("Sharpe ratio undefined: zero revenue dispersion on the whole grid")
        i = int(np.nanargmax(dist.sharpe))
    else:
        key = _tau_key(dist, tau)
        i = int(np.argmax(dist.var_tau[key]))

    var5 = dist.var_tau.get(_tau_key(dist, 0.05, strict=False)) if dist.var_tau else None
    return StrategyDecision(
        strategy=strategy,
        g_star=float(grid[i]),
        predicted_revenue=float(dist.mean[i]),
        g_hat=float(dist.g_hat),
        sharpe_at_g=float(dist.sharpe[i]),
        var5_at_g=float(var5[i]) if var5 is not None else float("nan"),
    )


def _tau_key(dist: RevenueDistribution, tau: float, strict: bool = True):
    for key in dist.var_tau:
        if abs(key - tau) < 1e-12:
            return key
    if strict:
        raise ValueError(f"tau = {tau} was not computed; available: {sorted(dist.var_tau)}")
    return None
