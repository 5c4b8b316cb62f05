"""Hourly market panel: CSV ingestion, validation, the decision-time
information set and regressor construction.

A panel is a dense ``(n_days, 24)`` grid per variable. Hour ``h`` (1..24)
is the delivery interval starting at local wall-clock ``h - 1``:00.

DST policy, applied when a market timezone is configured:

* spring-forward day: the non-existent local hour is filled with a copy of
  the hour before it (hour 3 duplicated from hour 2 in CET/CEST);
* fall-back day: the two occurrences of the repeated local hour are
  averaged.

Remaining holes are linearly interpolated per variable as long as a run of
missing hours is at most 24 long; longer runs (or holes touching the ends
of the file) are an error.
"""
from __future__ import annotations

import datetime as _dt
import logging
import warnings
from dataclasses import dataclass, field, fields, replace
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple
from zoneinfo import ZoneInfo

import numpy as np
import pandas as pd

from .econometrics import adf_test
from .errors import (
    DuplicateTimestamp,
    GapTooLarge,
    InsufficientHistory,
    InvalidValue,
    MissingColumn,
    PanelTooShort,
    ResvarError,
    UnparseableTimestamp,
)

logger = logging.getLogger(__name__)

HOURS = 24
MAX_GAP_HOURS = 24
VARIABLES = (
    "da_price",
    "id3_price",
    "load_actual",
    "res_actual",
    "load_forecast",
    "res_forecast",
)
# endogenous ordering used by every model: RES, load, DA, ID
ENDOG = ("res_actual", "load_actual", "da_price", "id3_price")
ENDOG_LABELS = ("RES", "Load", "DA", "ID")
N_EXOG = 12


@dataclass(frozen=True)
class ColumnMapping:
    """Names of the CSV columns and the timestamp/DST conventions."""

    timestamp: str = "timestamp"
    da_price: str = "da_price"
    id3_price: str = "id3_price"
    load_actual: str = "load_actual"
    res_actual: str = "res_actual"
    load_forecast: str = "load_forecast"
    res_forecast: str = "res_forecast"
    timezone: Optional[str] = "Europe/Berlin"
    timestamp_format: Optional[str] = None

    @classmethod
    def from_dict(cls, data: Optional[Mapping]) -> "ColumnMapping":
        data = dict(data or {})
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown column-mapping keys: {sorted(unknown)}")
        return cls(**data)

    def column(self, variable: str) -> str:
        return getattr(self, variable)


@dataclass(frozen=True)
class HourlyObservation:
    date: _dt.date
    hour: int
    da_price: float
    id3_price: float
    load_actual: float
    res_actual: float
    load_forecast: float
    res_forecast: float


@dataclass(frozen=True)
class InformationSet:
    """What is observable about day ``t - 1`` when the day-ahead order for
    day ``t`` is placed.

    For hours outside ``known_actual_hours`` the lag-1 load and RES actuals
    are replaced by their TSO forecasts and the lag-1 ID price is dropped.
    """

    decision_hour: int = 12
    known_actual_hours: frozenset = frozenset(range(1, 11))

    def __post_init__(self):
        hours = frozenset(int(h) for h in self.known_actual_hours)
        if not hours <= frozenset(range(1, HOURS + 1)):
            raise ValueError(f"known_actual_hours must lie in 1..24, got {sorted(hours)}")
        if not 1 <= self.decision_hour <= HOURS:
            raise ValueError(f"decision_hour must lie in 1..24, got {self.decision_hour}")
        object.__setattr__(self, "known_actual_hours", hours)

    @property
    def id_lag1_excluded_hours(self) -> frozenset:
        return frozenset(range(1, HOURS + 1)) - self.known_actual_hours

    def is_known(self, hour: int) -> bool:
        return hour in self.known_actual_hours


@dataclass(frozen=True)
class HourlyPanel:
    """Immutable day x hour grid of market data.

    Every variable array has shape ``(n_days, 24)``; column ``h - 1`` holds
    hour ``h``. ``imputed`` marks cells filled by interpolation.
    """

    dates: np.ndarray
    da_price: np.ndarray
    id3_price: np.ndarray
    load_actual: np.ndarray
    res_actual: np.ndarray
    load_forecast: np.ndarray
    res_forecast: np.ndarray
    imputed: Optional[np.ndarray] = None

    def __post_init__(self):
        dates = np.array(self.dates, dtype="datetime64[D]")
        object.__setattr__(self, "dates", dates)
        n = dates.size
        if n and np.any(np.diff(dates) <= np.timedelta64(0, "D")):
            raise InvalidValue("panel dates must be strictly increasing")
        for name in VARIABLES:
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != (n, HOURS):
                raise InvalidValue(f"{name} must have shape ({n}, 24), got {arr.shape}")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        imputed = (
            np.zeros((n, HOURS), dtype=bool)
            if self.imputed is None
            else np.array(self.imputed, dtype=bool)
        )
        imputed.flags.writeable = False
        object.__setattr__(self, "imputed", imputed)
        dates.flags.writeable = False

    @property
    def n_days(self) -> int:
        return int(self.dates.size)

    @property
    def start_date(self) -> _dt.date:
        return self.dates[0].item()

    @property
    def end_date(self) -> _dt.date:
        return self.dates[-1].item()

    @property
    def day_of_week(self) -> np.ndarray:
        """ISO weekday per day, Monday = 1 ... Sunday = 7."""
        # 1970-01-01 was a Thursday
        return ((self.dates.astype(np.int64) + 3) % 7 + 1).astype(int)

    @property
    def n_imputed(self) -> int:
        return int(self.imputed.sum())

    def day_index(self, date) -> int:
        target = np.datetime64(pd.Timestamp(date).date(), "D")
        idx = int((target - self.dates[0]).astype(int))
        if not 0 <= idx < self.n_days or self.dates[idx] != target:
            raise KeyError(f"{date} is not in the panel")
        return idx

    def endog(self, hour: int) -> np.ndarray:
        """``(n_days, 4)`` endogenous matrix (RES, load, DA, ID) for one hour."""
        return np.column_stack([getattr(self, v)[:, hour - 1] for v in ENDOG])

    def observation(self, t: int, hour: int) -> HourlyObservation:
        return HourlyObservation(
            date=self.dates[t].item(),
            hour=hour,
            **{v: float(getattr(self, v)[t, hour - 1]) for v in VARIABLES},
        )

    def with_values(self, **arrays) -> "HourlyPanel":
        return replace(self, **arrays)

    def slice_days(self, start: int, stop: int) -> "HourlyPanel":
        return HourlyPanel(
            dates=self.dates[start:stop],
            imputed=self.imputed[start:stop],
            **{v: getattr(self, v)[start:stop] for v in VARIABLES},
        )

    def to_frame(self, mapping: Optional[ColumnMapping] = None) -> pd.DataFrame:
        mapping = mapping or ColumnMapping()
        n = self.n_days
        day = np.repeat(self.dates.astype("datetime64[h]"), HOURS)
        offset = np.tile(np.arange(HOURS), n).astype("timedelta64[h]")
        stamps = pd.to_datetime(day + offset)
        out = {mapping.timestamp: stamps.strftime("%Y-%m-%d %H:%M")}
        for v in VARIABLES:
            out[mapping.column(v)] = getattr(self, v).ravel()
        return pd.DataFrame(out)


def validate_panel(panel: HourlyPanel) -> None:
    """Check the physical invariants; raise InvalidValue on the first violation."""
    checks = (
        ("load_actual", lambda a: a > 0, "> 0"),
        ("res_actual", lambda a: a >= 0, ">= 0"),
        ("load_forecast", lambda a: a >= 0, ">= 0"),
        ("res_forecast", lambda a: a >= 0, ">= 0"),
    )
    for name in VARIABLES:
        arr = getattr(panel, name)
        if not np.all(np.isfinite(arr)):
            t, h = np.argwhere(~np.isfinite(arr))[0]
            raise InvalidValue(f"{name} is not finite on {panel.dates[t]} hour {h + 1}")
    for name, ok, text in checks:
        arr = getattr(panel, name)
        bad = ~ok(arr)
        if bad.any():
            t, h = np.argwhere(bad)[0]
            raise InvalidValue(
                f"{name} must be {text}; got {arr[t, h]} on {panel.dates[t]} hour {h + 1}"
            )


def _parse_timestamps(raw: pd.Series, mapping: ColumnMapping) -> pd.Series:
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            stamps = pd.to_datetime(raw, format=mapping.timestamp_format)
        if stamps.dtype == object:
            # mixed UTC offsets across a DST change
            stamps = pd.to_datetime(raw, format=mapping.timestamp_format, utc=True)
    except (ValueError, TypeError) as exc:
        raise UnparseableTimestamp(f"cannot parse timestamps: {exc}") from exc
    if stamps.isna().any():
        row = int(np.flatnonzero(stamps.isna().to_numpy())[0])
        raise UnparseableTimestamp(f"unparseable timestamp in data row {row + 1}: {raw.iloc[row]!r}")
    if getattr(stamps.dt, "tz", None) is not None:
        stamps = stamps.dt.tz_convert(mapping.timezone or "UTC").dt.tz_localize(None)
    if ((stamps.dt.minute != 0) | (stamps.dt.second != 0)).any():
        row = int(np.flatnonzero(((stamps.dt.minute != 0) | (stamps.dt.second != 0)).to_numpy())[0])
        raise UnparseableTimestamp(f"timestamp not on the hour in data row {row + 1}: {raw.iloc[row]!r}")
    return stamps


def dst_hours(dates: Sequence, timezone: Optional[str]) -> Tuple[Dict, Dict]:
    """Map date -> local hour-of-day that is skipped (spring) or repeated
    (autumn) in ``timezone``."""
    if not timezone:
        return {}, {}
    tz = ZoneInfo(timezone)
    spring, autumn = {}, {}
    for d in dates:
        m0 = _dt.datetime(d.year, d.month, d.day, tzinfo=tz)
        nxt = d + _dt.timedelta(days=1)
        m1 = _dt.datetime(nxt.year, nxt.month, nxt.day, tzinfo=tz)
        if m0.utcoffset() == m1.utcoffset():
            continue
        for hod in range(HOURS):
            local = _dt.datetime(d.year, d.month, d.day, hod, tzinfo=tz)
            if local.replace(fold=0).utcoffset() != local.replace(fold=1).utcoffset():
                back = local.astimezone(_dt.timezone.utc).astimezone(tz)
                if back.replace(tzinfo=None) != local.replace(tzinfo=None):
                    spring[d] = hod
                else:
                    autumn[d] = hod
                break
    return spring, autumn


def _interpolate(values: np.ndarray, name: str, dates: np.ndarray) -> np.ndarray:
    flat = values.ravel().copy()
    missing = np.isnan(flat)
    if not missing.any():
        return flat.reshape(values.shape)
    edges = np.diff(np.concatenate([[0], missing.astype(int), [0]]))
    starts = np.flatnonzero(edges == 1)
    stops = np.flatnonzero(edges == -1)
    for a, b in zip(starts, stops):
        where = f"{name} from {dates[a // HOURS]} hour {a % HOURS + 1}"
        if b - a > MAX_GAP_HOURS:
            raise GapTooLarge(f"{b - a} consecutive missing hours in {where}")
        if a == 0 or b == flat.size:
            raise GapTooLarge(f"cannot interpolate a gap at the edge of the file ({where})")
    good = np.flatnonzero(~missing)
    flat[missing] = np.interp(np.flatnonzero(missing), good, flat[good])
    return flat.reshape(values.shape)


def load_panel(path, format_spec: Optional[ColumnMapping] = None) -> HourlyPanel:
    """Read a long-format hourly CSV into a validated, gap-free panel.

    ``format_spec`` names the columns; timestamps are local market time,
    hour-beginning. The number of interpolated (day, hour) cells is
    available as ``panel.n_imputed``.
    """
    mapping = format_spec or ColumnMapping()
    df = pd.read_csv(path, float_precision="round_trip")
    for col in (mapping.timestamp,) + tuple(mapping.column(v) for v in VARIABLES):
        if col not in df.columns:
            raise MissingColumn(col)

    stamps = _parse_timestamps(df[mapping.timestamp], mapping)
    day = stamps.dt.normalize().to_numpy().astype("datetime64[D]")
    hod = stamps.dt.hour.to_numpy()
    values = {}
    for v in VARIABLES:
        try:
            values[v] = pd.to_numeric(df[mapping.column(v)]).to_numpy(dtype=float)
        except (ValueError, TypeError) as exc:
            raise InvalidValue(f"non-numeric entry in column {mapping.column(v)!r}") from exc

    first, last = day.min(), day.max()
    n_days = int((last - first).astype(int)) + 1
    dates = first + np.arange(n_days).astype("timedelta64[D]")
    spring, autumn = dst_hours([d.item() for d in dates], mapping.timezone)

    slot = (day - first).astype(int) * HOURS + hod
    order = np.argsort(slot, kind="stable")
    slot_sorted = slot[order]
    uniq, first_pos, counts = np.unique(slot_sorted, return_index=True, return_counts=True)

    grids = {v: np.full(n_days * HOURS, np.nan) for v in VARIABLES}
    for s, pos, c in zip(uniq, first_pos, counts):
        rows = order[pos:pos + c]
        if c > 1:
            d = dates[s // HOURS].item()
            if c != 2 or autumn.get(d) != s % HOURS:
                raise DuplicateTimestamp(
                    f"duplicate timestamp {d} {s % HOURS:02d}:00 ({c} rows)"
                )
        for v in VARIABLES:
            grids[v][s] = np.mean(values[v][rows])

    dst_filled = 0
    for d, h_skip in spring.items():
        s = int((np.datetime64(d, "D") - first).astype(int)) * HOURS + h_skip
        src = s - 1 if h_skip > 0 else s + 1
        if all(np.isnan(grids[v][s]) for v in VARIABLES):
            for v in VARIABLES:
                grids[v][s] = grids[v][src]
            dst_filled += 1

    imputed = np.zeros(n_days * HOURS, dtype=bool)
    for v in VARIABLES:
        imputed |= np.isnan(grids[v])
    arrays = {
        v: _interpolate(grids[v].reshape(n_days, HOURS), mapping.column(v), dates)
        for v in VARIABLES
    }
    panel = HourlyPanel(dates=dates, imputed=imputed.reshape(n_days, HOURS), **arrays)
    validate_panel(panel)
    logger.info(
        "loaded %d days from %s; %d cells interpolated, %d DST cells copied",
        n_days, path, panel.n_imputed, dst_filled,
    )
    return panel


def write_panel(panel: HourlyPanel, path, format_spec: Optional[ColumnMapping] = None) -> None:
    """Write the panel as a long CSV that ``load_panel`` reads back exactly."""
    panel.to_frame(format_spec).to_csv(path, index=False)


def descriptive_stats(panel: HourlyPanel, adf_lags: int = 7) -> Dict[str, Dict[str, float]]:
    """Per-variable mean, average per-hour standard deviation and the number
    of hours for which ADF rejects a unit root at 5%.

    Means and standard deviations are computed hour by hour and then
    averaged over the 24 hours.
    """
    if panel.n_days < 100:
        raise PanelTooShort(f"descriptive statistics need at least 100 days, got {panel.n_days}")
    out = {}
    for label, var in zip(ENDOG_LABELS, ENDOG):
        arr = getattr(panel, var)
        rejects = 0
        for h in range(HOURS):
            try:
                rejects += adf_test(arr[:, h], max_lag=adf_lags)["reject_at_5pct"]
            except ResvarError:
                # constant or degenerate hour: counted as non-rejection
                pass
        out[label] = {
            "mean": float(arr.mean(axis=0).mean()),
            "std": float(arr.std(axis=0, ddof=1).mean()),
            "adf_reject_count": int(rejects),
        }
    return out


@dataclass(frozen=True)
class RegressorRow:
    """Regressors for one (day, hour).

    ``x_row`` holds the 12 exogenous values: Monday..Sunday dummies, RES
    forecast, load forecast, previous-day minimum, maximum and hour-24 DA
    price. ``y_lags[p]`` is the (RES, load, DA, ID) vector ``p`` days back.
    """

    x_row: np.ndarray
    y_lags: Dict[int, np.ndarray]
    id_lag1_excluded: bool


def apply_information_mask(y_lag1, res_forecast, load_forecast, hour: int,
                           info: InformationSet) -> np.ndarray:
    """Replace unobservable day t-1 actuals for ``hour``.

    Works on a single 4-vector or on stacked rows ``(..., 4)``. The ID entry
    of an excluded hour is set to 0; its coefficient is pinned to zero.
    """
    y = np.array(y_lag1, dtype=float, copy=True)
    if info.is_known(hour):
        return y
    y[..., 0] = res_forecast
    y[..., 1] = load_forecast
    y[..., 3] = 0.0
    return y


def _check_lags(lags: Iterable[int]) -> Tuple[int, ...]:
    lags = tuple(sorted(set(int(p) for p in lags)))
    if not lags or lags[0] < 1 or lags[-1] > 7:
        raise ValueError(f"lags must be a non-empty subset of 1..7, got {lags}")
    return lags


def build_regressor_row(panel: HourlyPanel, t: int, h: int, info: Optional[InformationSet] = None,
                        lags: Sequence[int] = (1, 2, 7)) -> RegressorRow:
    """Regressors for forecasting hour ``h`` of day index ``t``.

    Only day-``t`` TSO forecasts and the calendar are read from day ``t``;
    everything else comes from earlier days.
    """
    info = info or InformationSet()
    lags = _check_lags(lags)
    if not 1 <= h <= HOURS:
        raise ValueError(f"hour must lie in 1..24, got {h}")
    if t < 7 or t < lags[-1]:
        raise InsufficientHistory(f"day index {t} has fewer than 7 preceding days")
    if t >= panel.n_days:
        raise InsufficientHistory(f"day index {t} is beyond the panel ({panel.n_days} days)")

    x = np.zeros(N_EXOG)
    x[panel.day_of_week[t] - 1] = 1.0
    x[7] = panel.res_forecast[t, h - 1]
    x[8] = panel.load_forecast[t, h - 1]
    prev_da = panel.da_price[t - 1]
    x[9] = prev_da.min()
    x[10] = prev_da.max()
    x[11] = prev_da[HOURS - 1]

    y_lags = {}
    for p in lags:
        y = np.array([getattr(panel, v)[t - p, h - 1] for v in ENDOG])
        if p == 1:
            y = apply_information_mask(
                y, panel.res_forecast[t - 1, h - 1], panel.load_forecast[t - 1, h - 1], h, info
            )
        y_lags[p] = y
    return RegressorRow(x_row=x, y_lags=y_lags, id_lag1_excluded=not info.is_known(h))


def regressor_block(panel: HourlyPanel, h: int, days: np.ndarray,
                    info: Optional[InformationSet] = None,
                    lags: Sequence[int] = (1, 2, 7)) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorised ``build_regressor_row`` over many days of one hour.

    Returns ``(x, z)`` with ``x`` of shape ``(n, 12)`` and ``z`` of shape
    ``(n, 4 * len(lags))`` stacking the (masked) lag vectors in lag order.
    """
    info = info or InformationSet()
    lags = _check_lags(lags)
    days = np.asarray(days, dtype=int)
    if days.size and (days.min() < max(7, lags[-1]) or days.max() >= panel.n_days):
        raise InsufficientHistory("regressor days must have 7 preceding days inside the panel")
    col = h - 1
    n = days.size
    x = np.zeros((n, N_EXOG))
    x[np.arange(n), panel.day_of_week[days] - 1] = 1.0
    x[:, 7] = panel.res_forecast[days, col]
    x[:, 8] = panel.load_forecast[days, col]
    prev_da = panel.da_price[days - 1]
    x[:, 9] = prev_da.min(axis=1)
    x[:, 10] = prev_da.max(axis=1)
    x[:, 11] = prev_da[:, HOURS - 1]

    endog = panel.endog(h)
    blocks = []
    for p in lags:
        y = endog[days - p]
        if p == 1:
            y = apply_information_mask(
                y, panel.res_forecast[days - 1, col], panel.load_forecast[days - 1, col], h, info
            )
        blocks.append(y)
    z = np.hstack(blocks) if blocks else np.zeros((n, 0))
    return x, z
