"""Per-hour structural VAR: estimation, point forecasts and bootstrap
scenario fans.

For hour ``h`` the reduced form is

    Y_t = A0 x_t + sum_p A_p Y_{t-p} + e_t,   Y = (RES, load, DA, ID)

estimated by least squares, with ``e_t = B u_t``, ``B`` lower triangular and
``cov(u) = I`` (``B`` is the Cholesky factor of the residual covariance).
Scenarios resample each structural shock coordinate independently from its
own history and map them back through ``B``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from .econometrics import (
    TriangularFactor,
    cholesky_lower,
    ols_multivariate,
    structural_shocks,
)
from .errors import EmptyShockHistory, InsufficientHistory, TooFewDraws
from .market_data import (
    HOURS,
    N_EXOG,
    HourlyPanel,
    InformationSet,
    build_regressor_row,
    regressor_block,
)

N_ENDOG = 4
MIN_WINDOW_DAYS = 200
MIN_DRAWS = 100
GWH_TO_MWH = 1000.0
LAST_PRICE_COLUMN = N_EXOG - 1


@dataclass(frozen=True)
class VarSpec:
    lags: Tuple[int, ...] = (1, 2, 7)
    rho: float = 0.005
    n_endog: int = N_ENDOG
    n_exog: int = N_EXOG

    def __post_init__(self):
        lags = tuple(sorted(set(int(p) for p in self.lags)))
        if not lags or lags[0] < 1 or lags[-1] > 7:
            raise ValueError(f"lags must be a non-empty subset of 1..7, got {self.lags}")
        if not 0 < self.rho <= 0.01:
            raise ValueError(f"rho must lie in (0, 0.01], got {self.rho}")
        if self.n_endog != N_ENDOG or self.n_exog != N_EXOG:
            raise ValueError("only the 4-variable, 12-regressor layout is supported")
        object.__setattr__(self, "lags", lags)


@dataclass(frozen=True)
class HourModel:
    """Fitted model for one delivery hour.

    ``exog_coeffs`` is ``A0`` (4 x 12), ``lag_coeffs[p]`` is ``A_p`` (4 x 4),
    ``shocks`` are the recovered structural shocks of the fit window.
    """

    hour: int
    spec: VarSpec
    exog_coeffs: np.ndarray
    lag_coeffs: Dict[int, np.ndarray]
    b: TriangularFactor
    shocks: np.ndarray
    sigma: np.ndarray
    residuals: np.ndarray
    fit_window: Tuple[int, int]
    id_lag1_excluded: bool = False

    def predict(self, x_row: np.ndarray, y_lags: Dict[int, np.ndarray]) -> np.ndarray:
        y = self.exog_coeffs @ x_row
        for p, a in self.lag_coeffs.items():
            y = y + a @ y_lags[p]
        return y


@dataclass(frozen=True)
class ScenarioSet:
    """Bootstrap fan for one (day, hour).

    Volumes ``g_hat`` and ``g_draws`` are utility generation in MWh;
    ``y_draws`` rows are (RES, load, DA, ID) draws.
    """

    n_draws: int
    y_point: np.ndarray
    y_draws: np.ndarray
    g_hat: float
    g_draws: np.ndarray
    seed: Optional[int]
    shock_draws: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def da_draws(self) -> np.ndarray:
        return self.y_draws[:, 2]

    @property
    def id_draws(self) -> np.ndarray:
        return self.y_draws[:, 3]


def _id_lag1_column(spec: VarSpec) -> Optional[int]:
    """Position of the lag-1 ID regressor inside the stacked lag block."""
    if 1 not in spec.lags:
        return None
    return spec.lags.index(1) * N_ENDOG + 3


def last_price_duplicated(hour: int, spec: VarSpec) -> bool:
    """At hour 24 the last-known-price regressor equals the lag-1 DA price."""
    return hour == HOURS and 1 in spec.lags


def design_matrix(panel: HourlyPanel, hour: int, days, spec: VarSpec,
                  info: InformationSet) -> Tuple[np.ndarray, bool]:
    """Full regressor matrix ``[x | lags]`` for ``days``.

    The lag-1 ID column is removed for hours outside the information set, and
    at hour 24 the last-price column is removed because it duplicates the
    lag-1 DA column exactly.
    """
    x, z = regressor_block(panel, hour, days, info, spec.lags)
    excluded = not info.is_known(hour) and 1 in spec.lags
    if excluded:
        z = np.delete(z, _id_lag1_column(spec), axis=1)
    if last_price_duplicated(hour, spec):
        x = np.delete(x, LAST_PRICE_COLUMN, axis=1)
    return np.hstack([x, z]), excluded


def fit_hour_model(panel: HourlyPanel, hour: int, window: Tuple[int, int],
                   spec: Optional[VarSpec] = None,
                   info: Optional[InformationSet] = None) -> HourModel:
    """Fit the SVAR for ``hour`` on day indices ``window[0]..window[1]``
    (inclusive). Days without a full week of history are trimmed."""
    spec = spec or VarSpec()
    info = info or InformationSet()
    if not 1 <= hour <= HOURS:
        raise ValueError(f"hour must lie in 1..24, got {hour}")
    first, last = int(window[0]), int(window[1])
    if last >= panel.n_days:
        raise InsufficientHistory(f"window ends at day {last}, panel has {panel.n_days} days")
    start = max(first, 7, spec.lags[-1])
    days = np.arange(start, last + 1)
    if days.size < MIN_WINDOW_DAYS:
        raise InsufficientHistory(
            f"fit window has {days.size} usable days after lag trimming; need {MIN_WINDOW_DAYS}"
        )

    design, excluded = design_matrix(panel, hour, days, spec, info)
    y = panel.endog(hour)[days]
    fit = ols_multivariate(y, design, dof_adjust=True)
    factor = cholesky_lower(fit.sigma)
    shocks = structural_shocks(fit, factor)

    coef = fit.coefficients
    if last_price_duplicated(hour, spec):
        coef = np.insert(coef, LAST_PRICE_COLUMN, 0.0, axis=1)
    lag_part = coef[:, N_EXOG:]
    if excluded:
        lag_part = np.insert(lag_part, _id_lag1_column(spec), 0.0, axis=1)
    lag_coeffs = {
        p: lag_part[:, i * N_ENDOG:(i + 1) * N_ENDOG].copy()
        for i, p in enumerate(spec.lags)
    }
    return HourModel(
        hour=hour,
        spec=spec,
        exog_coeffs=coef[:, :N_EXOG].copy(),
        lag_coeffs=lag_coeffs,
        b=factor,
        shocks=shocks,
        sigma=fit.sigma,
        residuals=fit.residuals,
        fit_window=(int(days[0]), int(days[-1])),
        id_lag1_excluded=excluded,
    )


def point_forecast(model: HourModel, panel: HourlyPanel, t: int,
                   info: Optional[InformationSet] = None) -> np.ndarray:
    """``Y_hat = A0 x_t + sum_p A_p Y_{t-p}`` using the masked lag values."""
    info = info or InformationSet()
    row = build_regressor_row(panel, t, model.hour, info, model.spec.lags)
    return model.predict(row.x_row, row.y_lags)


def simulate_scenarios(model: HourModel, y_point, n_draws: int = 1000,
                       seed: Optional[int] = None) -> ScenarioSet:
    """Bootstrap ``n_draws`` next-day vectors around ``y_point``.

    Each structural shock coordinate is drawn with replacement from its own
    column of ``model.shocks``, independently of the others. Negative RES
    draws are floored at zero for the generation volumes only.
    """
    if n_draws < MIN_DRAWS:
        raise TooFewDraws(f"need at least {MIN_DRAWS} draws, got {n_draws}")
    shocks = np.asarray(model.shocks, dtype=float)
    if shocks.ndim != 2 or shocks.shape[0] == 0:
        raise EmptyShockHistory("model has no structural shock history")
    y_point = np.asarray(y_point, dtype=float)

    rng = np.random.default_rng(seed)
    idx = rng.integers(0, shocks.shape[0], size=(n_draws, N_ENDOG))
    u = shocks[idx, np.arange(N_ENDOG)]
    y_draws = y_point + u @ model.b.b.T

    to_mwh = model.spec.rho * GWH_TO_MWH
    g_hat = to_mwh * max(float(y_point[0]), 0.0)
    g_draws = to_mwh * np.maximum(y_draws[:, 0], 0.0)
    return ScenarioSet(
        n_draws=n_draws,
        y_point=y_point,
        y_draws=y_draws,
        g_hat=g_hat,
        g_draws=g_draws,
        seed=seed,
        shock_draws=u,
    )


def model_to_dict(model: HourModel) -> dict:
    """JSON-ready audit record of a fitted hour model."""
    return {
        "hour": model.hour,
        "lags": list(model.spec.lags),
        "rho": model.spec.rho,
        "endog_order": ["RES", "Load", "DA", "ID"],
        "exog_order": [
            "mon", "tue", "wed", "thu", "fri", "sat", "sun",
            "res_forecast", "load_forecast", "da_min_prev", "da_max_prev", "da_h24_prev",
        ],
        "fit_window": list(model.fit_window),
        "id_lag1_excluded": model.id_lag1_excluded,
        "exog_coeffs": model.exog_coeffs.tolist(),
        "lag_coeffs": {str(p): a.tolist() for p, a in model.lag_coeffs.items()},
        "b": model.b.b.tolist(),
        "sigma": model.sigma.tolist(),
        "shocks": model.shocks.tolist(),
    }


def model_from_dict(data: dict) -> HourModel:
    shocks = np.asarray(data["shocks"], dtype=float).reshape(-1, N_ENDOG)
    return HourModel(
        hour=int(data["hour"]),
        spec=VarSpec(lags=tuple(data["lags"]), rho=float(data["rho"])),
        exog_coeffs=np.asarray(data["exog_coeffs"], dtype=float),
        lag_coeffs={int(p): np.asarray(a, dtype=float) for p, a in data["lag_coeffs"].items()},
        b=TriangularFactor(np.asarray(data["b"], dtype=float)),
        shocks=shocks,
        sigma=np.asarray(data["sigma"], dtype=float),
        residuals=shocks @ np.asarray(data["b"], dtype=float).T,
        fit_window=tuple(data["fit_window"]),
        id_lag1_excluded=bool(data["id_lag1_excluded"]),
    )


def save_model(model: HourModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh, indent=1)


def load_model(path) -> HourModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))
