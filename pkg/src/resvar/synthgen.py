"""Synthetic hourly panels generated from a known per-hour SVAR.

The TSO forecasts are exogenous: each follows a stationary AR(1) around an
hourly (and, for load, weekday) profile. Actual RES and load are the
forecast plus the structural forecast error, prices follow the SVAR. Lag-1
regressors obey the same information set as the estimator, so a fitted
model targets exactly the generating coefficients.

The previous-day DA transforms (min, max, hour 24) couple the hours, hence
simulation runs day by day over all 24 hours at once. Shock and forecast
innovations are drawn up front from per-hour streams seeded with
``cell_seed(seed, 0, hour)``.
"""
from __future__ import annotations

import datetime as _dt
import json
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import UnstableTruth
from .market_data import HOURS, N_EXOG, HourlyPanel, InformationSet, validate_panel
from .seeding import cell_seed

K = 4
BURN_IN = 100
DEFAULT_START = _dt.date(2015, 10, 1)


@dataclass(frozen=True)
class GroundTruth:
    """True per-hour parameters (arrays indexed by ``hour - 1`` first).

    ``forecast_mean`` is the ``(24, 2)`` hourly level of the RES and load
    forecasts, ``load_weekday`` the additive Monday..Sunday load offset,
    ``forecast_ar`` / ``forecast_noise_std`` their AR(1) persistence and
    innovation scale.
    """

    exog_coeffs: np.ndarray
    lag_coeffs: Dict[int, np.ndarray]
    b: np.ndarray
    forecast_mean: np.ndarray
    load_weekday: np.ndarray
    forecast_ar: Tuple[float, float] = (0.8, 0.7)
    forecast_noise_std: Tuple[float, float] = (2.2, 4.0)
    shock_dist: str = "gaussian"
    empirical_shocks: Optional[np.ndarray] = field(default=None, repr=False)
    known_actual_hours: frozenset = frozenset(range(1, 11))

    @property
    def lags(self) -> Tuple[int, ...]:
        return tuple(sorted(self.lag_coeffs))

    @property
    def info(self) -> InformationSet:
        return InformationSet(known_actual_hours=self.known_actual_hours)

    def to_dict(self) -> dict:
        return {
            "exog_coeffs": self.exog_coeffs.tolist(),
            "lag_coeffs": {str(p): a.tolist() for p, a in self.lag_coeffs.items()},
            "b": self.b.tolist(),
            "forecast_mean": self.forecast_mean.tolist(),
            "load_weekday": self.load_weekday.tolist(),
            "forecast_ar": list(self.forecast_ar),
            "forecast_noise_std": list(self.forecast_noise_std),
            "shock_dist": self.shock_dist,
            "empirical_shocks": None if self.empirical_shocks is None else self.empirical_shocks.tolist(),
            "known_actual_hours": sorted(self.known_actual_hours),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GroundTruth":
        emp = data.get("empirical_shocks")
        return cls(
            exog_coeffs=np.asarray(data["exog_coeffs"], dtype=float),
            lag_coeffs={int(p): np.asarray(a, dtype=float) for p, a in data["lag_coeffs"].items()},
            b=np.asarray(data["b"], dtype=float),
            forecast_mean=np.asarray(data["forecast_mean"], dtype=float),
            load_weekday=np.asarray(data["load_weekday"], dtype=float),
            forecast_ar=tuple(data.get("forecast_ar", (0.8, 0.7))),
            forecast_noise_std=tuple(data.get("forecast_noise_std", (2.2, 4.0))),
            shock_dist=data.get("shock_dist", "gaussian"),
            empirical_shocks=None if emp is None else np.asarray(emp, dtype=float),
            known_actual_hours=frozenset(data.get("known_actual_hours", range(1, 11))),
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load(cls, path) -> "GroundTruth":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _hour_profile(h: np.ndarray, peak: float, width: float) -> np.ndarray:
    return np.exp(-(((h - peak) / width) ** 2))


# calibrated so a long default run matches the desk-scale magnitudes:
# RES 16.4, load 62.0, DA 36.1, ID 36.2 (means); DA/ID std about 15.5/17
_DA_LEVEL = -17.29
_ID_SHIFT = 0.13
_WEEKDAY_PRICE = np.array([2.0, 2.5, 2.5, 2.5, 1.5, -3.0, -8.0])
_WEEKDAY_LOAD = np.array([2.0, 2.5, 2.5, 2.5, 1.5, -3.5, -7.5])


def default_truth(known_actual_hours=frozenset(range(1, 11))) -> GroundTruth:
    """Ground truth with desk-scale magnitudes and a recursive B in which
    an unexpected RES surplus lowers both prices, more so intraday."""
    hours = np.arange(1, HOURS + 1, dtype=float)
    res_mean = 14.45 + 7.5 * _hour_profile(hours, 13.0, 3.5)
    load_mean = 61.97 + 8.0 * np.cos(2 * np.pi * (hours - 13.0) / 24.0)
    forecast_mean = np.column_stack([res_mean, load_mean])

    a0 = np.zeros((HOURS, K, N_EXOG))
    a0[:, 0, 7] = 1.0
    a0[:, 1, 8] = 1.0
    for row, shift in ((2, 0.0), (3, _ID_SHIFT)):
        a0[:, row, :7] = _DA_LEVEL + shift + _WEEKDAY_PRICE
        a0[:, row, 7] = -0.8
        a0[:, row, 8] = 0.75
        a0[:, row, 9] = 0.05
        a0[:, row, 10] = 0.05
        a0[:, row, 11] = 0.1

    lag = {p: np.zeros((HOURS, K, K)) for p in (1, 2, 7)}
    for row in (2, 3):
        lag[1][:, row, 2] = 0.25
        lag[1][:, row, 3] = 0.05
        lag[1][:, row, 0] = -0.1
        lag[2][:, row, 2] = 0.05
        lag[7][:, row, 2] = 0.1
    excluded = [h - 1 for h in range(1, HOURS + 1) if h not in known_actual_hours]
    lag[1][excluded, :, 3] = 0.0
    # at hour 24 the last price is the lag-1 DA price; keep only the lag term
    lag[1][HOURS - 1, :, 2] += a0[HOURS - 1, :, 11]
    a0[HOURS - 1, :, 11] = 0.0

    b = np.zeros((HOURS, K, K))
    b[:, 0, 0] = 1.5
    b[:, 1, 0] = 0.3
    b[:, 1, 1] = 2.0
    b[:, 2] = [-2.0, 1.0, 10.0, 0.0]
    b[:, 3] = [-3.5, 1.5, 9.5, 6.0]
    return GroundTruth(
        exog_coeffs=a0,
        lag_coeffs=lag,
        b=b,
        forecast_mean=forecast_mean,
        load_weekday=_WEEKDAY_LOAD.copy(),
        known_actual_hours=frozenset(known_actual_hours),
    )


def mean_preserving_spread_truth(extra_std: float = 8.0, base: Optional[GroundTruth] = None) -> GroundTruth:
    """Truth in which ID equals DA plus an independent zero-mean shock of
    standard deviation ``extra_std``: the ID equation copies the DA
    equation and ``b[ID] = b[DA] + extra_std * e_4``."""
    base = base or default_truth()
    a0 = base.exog_coeffs.copy()
    a0[:, 3] = a0[:, 2]
    lag = {p: a.copy() for p, a in base.lag_coeffs.items()}
    for a in lag.values():
        a[:, 3] = a[:, 2]
    b = base.b.copy()
    b[:, 3] = b[:, 2]
    b[:, 3, 3] = extra_std
    return replace(base, exog_coeffs=a0, lag_coeffs=lag, b=b)


def spectral_radius(truth: GroundTruth) -> np.ndarray:
    """Per-hour spectral radius of the lag companion matrix."""
    pmax = max(truth.lags)
    out = np.zeros(HOURS)
    for h in range(HOURS):
        comp = np.zeros((K * pmax, K * pmax))
        for p, a in truth.lag_coeffs.items():
            comp[:K, (p - 1) * K:p * K] = a[h]
        comp[K:, :-K] = np.eye(K * (pmax - 1))
        out[h] = np.max(np.abs(np.linalg.eigvals(comp)))
    return out


def check_truth(truth: GroundTruth) -> None:
    if truth.exog_coeffs.shape != (HOURS, K, N_EXOG) or truth.b.shape != (HOURS, K, K):
        raise ValueError("ground truth arrays have the wrong shape")
    if np.any(np.triu(truth.b, 1) != 0) or np.any(np.diagonal(truth.b, axis1=1, axis2=2) <= 0):
        raise UnstableTruth("B must be lower triangular with a positive diagonal")
    if truth.lags and max(truth.lags) > 7:
        raise ValueError("lags must not exceed 7")
    rad = spectral_radius(truth)
    if np.any(rad >= 1.0):
        raise UnstableTruth(f"lag dynamics are explosive (max spectral radius {rad.max():.4f})")
    if truth.shock_dist not in ("gaussian", "empirical"):
        raise ValueError(f"unknown shock distribution {truth.shock_dist!r}")
    if truth.shock_dist == "empirical" and (truth.empirical_shocks is None or len(truth.empirical_shocks) == 0):
        raise ValueError("empirical shock distribution needs a non-empty shock pool")


def _draw_innovations(truth: GroundTruth, n_total: int, seed: int):
    u = np.empty((n_total, HOURS, K))
    eta = np.empty((n_total, HOURS, 2))
    for h in range(HOURS):
        rng = np.random.default_rng(cell_seed(seed, 0, h + 1))
        if truth.shock_dist == "gaussian":
            u[:, h] = rng.standard_normal((n_total, K))
        else:
            pool = np.asarray(truth.empirical_shocks, dtype=float)
            idx = rng.integers(0, pool.shape[0], size=(n_total, K))
            u[:, h] = pool[idx, np.arange(K)]
        eta[:, h] = rng.standard_normal((n_total, 2))
    return u, eta


def generate_panel(truth: Optional[GroundTruth] = None, n_days: int = 1461, seed: int = 0,
                   start_date=DEFAULT_START) -> HourlyPanel:
    """Simulate ``n_days`` of hourly data (after a discarded burn-in).

    RES actuals and forecasts are floored at zero.
    """
    truth = truth or default_truth()
    if n_days < 100:
        raise ValueError(f"n_days must be at least 100, got {n_days}")
    check_truth(truth)

    n_total = n_days + BURN_IN
    start = np.datetime64(start_date, "D") - np.timedelta64(BURN_IN, "D")
    dates = start + np.arange(n_total).astype("timedelta64[D]")
    dow = ((dates.astype(np.int64) + 3) % 7).astype(int)

    u, eta = _draw_innovations(truth, n_total, seed)
    lags = truth.lags
    pmax = max(lags) if lags else 1
    excluded = np.array([h not in truth.known_actual_hours for h in range(1, HOURS + 1)])
    phi = np.asarray(truth.forecast_ar, dtype=float)
    noise = np.asarray(truth.forecast_noise_std, dtype=float)

    y = np.zeros((n_total, HOURS, K))
    fc = np.zeros((n_total, HOURS, 2))
    level = np.zeros((n_total, HOURS, 2))
    for t in range(n_total):
        level[t] = truth.forecast_mean
        level[t, :, 1] += truth.load_weekday[dow[t]]
    # steady-state start
    fc[0] = level[0]
    mean_y = np.column_stack([truth.forecast_mean, np.full((HOURS, 2), 36.0)])
    y[:pmax] = mean_y

    for t in range(n_total):
        if t > 0:
            fc[t] = level[t] + phi * (fc[t - 1] - level[t - 1]) + noise * eta[t]
            fc[t] = np.maximum(fc[t], 0.0)
        if t < pmax:
            continue
        x = np.zeros((HOURS, N_EXOG))
        x[:, dow[t]] = 1.0
        x[:, 7] = fc[t, :, 0]
        x[:, 8] = fc[t, :, 1]
        prev_da = y[t - 1, :, 2]
        x[:, 9] = prev_da.min()
        x[:, 10] = prev_da.max()
        x[:, 11] = prev_da[HOURS - 1]
        yt = np.einsum("hkm,hm->hk", truth.exog_coeffs, x)
        for p in lags:
            yl = y[t - p].copy()
            if p == 1:
                yl[excluded, 0] = fc[t - 1, excluded, 0]
                yl[excluded, 1] = fc[t - 1, excluded, 1]
                yl[excluded, 3] = 0.0
            yt += np.einsum("hkj,hj->hk", truth.lag_coeffs[p], yl)
        yt += np.einsum("hkj,hj->hk", truth.b, u[t])
        yt[:, 0] = np.maximum(yt[:, 0], 0.0)
        y[t] = yt

    keep = slice(BURN_IN, n_total)
    panel = HourlyPanel(
        dates=dates[keep],
        res_actual=y[keep, :, 0],
        load_actual=y[keep, :, 1],
        da_price=y[keep, :, 2],
        id3_price=y[keep, :, 3],
        res_forecast=fc[keep, :, 0],
        load_forecast=fc[keep, :, 1],
    )
    validate_panel(panel)
    return panel
