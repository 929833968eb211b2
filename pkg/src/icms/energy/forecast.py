"""Day-type x hour seasonal forecaster for street movement.

The model is a 48-cell mean table keyed by (workday/weekend, local hour),
with a per-day-type fallback mean. It is deterministic and exactly testable;
richer regressors can sit behind the same fit/forecast interface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime
from typing import Mapping, Optional

from ..config import Config
from ..core import DayType, day_type, ensure_utc
from ..errors import InsufficientDataError
from .series import HOUR, MovementSeries, floor_hour


@dataclass(frozen=True)
class FeatureVector:
    hour_of_day: int
    day_type: DayType
    is_holiday: bool
    temp_c: Optional[float] = None
    humidity_pct: Optional[float] = None
    event: Optional[bool] = None


def engineer_features(
    ts: datetime,
    config: Config,
    weather: Optional[tuple[float, float]] = None,
    event: Optional[bool] = None,
) -> FeatureVector:
    """Temporal features for one grid hour, computed in the configured zone;
    weather and event flags attach only when their sources are wired in."""
    local = ensure_utc(ts).astimezone(config.tz)
    return FeatureVector(
        hour_of_day=local.hour,
        day_type=day_type(local.date(), config.holidays),
        is_holiday=local.date() in config.holidays,
        temp_c=weather[0] if weather else None,
        humidity_pct=weather[1] if weather else None,
        event=event,
    )


@dataclass(frozen=True)
class ForecastModel:
    street_id: str
    cells: Mapping[tuple[DayType, int], float]   # empty cells simply absent
    fallbacks: Mapping[DayType, float]
    trained_from: datetime
    trained_to: datetime
    residual_std: float
    n_points: int

    def predict_hour(self, ts: datetime, config: Config) -> tuple[float, bool]:
        """Cell mean, else the day-type fallback, else zero with a flag."""
        fv = engineer_features(ts, config)
        cell = self.cells.get((fv.day_type, fv.hour_of_day))
        if cell is not None:
            return cell, False
        fallback = self.fallbacks.get(fv.day_type)
        if fallback is not None:
            return fallback, False
        return 0.0, True


@dataclass(frozen=True)
class Forecast:
    street_id: str
    generated_at: datetime
    points: tuple[tuple[datetime, float], ...]
    used_zero_fallback: bool


@dataclass(frozen=True)
class EvalReport:
    street_id: str
    mae: float
    mape: Optional[float]   # mean |pred-actual| / actual over positive actuals
    n: int


def fit_model(series: MovementSeries, config: Config) -> ForecastModel:
    """Group present counts by (day type, local hour) and take cell means."""
    groups: dict[tuple[DayType, int], list[float]] = {}
    timestamps: list[datetime] = []
    for ts, count in series.points:
        if count is None:
            continue
        fv = engineer_features(ts, config)
        groups.setdefault((fv.day_type, fv.hour_of_day), []).append(count)
        timestamps.append(ts)
    if not timestamps:
        raise InsufficientDataError(f"street {series.street_id!r} has no present points")

    # fsum keeps the model bit-identical under input point permutation
    cells = {key: math.fsum(vals) / len(vals) for key, vals in groups.items()}
    by_day_type: dict[DayType, list[float]] = {}
    for (dt, _), vals in groups.items():
        by_day_type.setdefault(dt, []).extend(vals)
    fallbacks = {dt: math.fsum(vals) / len(vals) for dt, vals in by_day_type.items()}

    n = len(timestamps)
    sq_sum = math.fsum(
        (v - cells[key]) ** 2 for key, vals in groups.items() for v in vals
    )
    return ForecastModel(
        street_id=series.street_id,
        cells=cells,
        fallbacks=fallbacks,
        trained_from=min(timestamps),
        trained_to=max(timestamps),
        residual_std=math.sqrt(sq_sum / n),
        n_points=n,
    )


def forecast_24h(model: ForecastModel, from_ts: datetime, config: Config) -> Forecast:
    """Predict the 24 hours from the first grid hour at or after from_ts."""
    from_ts = ensure_utc(from_ts, "from_ts")
    first = floor_hour(from_ts)
    if first < from_ts:
        first += HOUR
    points: list[tuple[datetime, float]] = []
    flagged = False
    for i in range(24):
        ts = first + i * HOUR
        value, used_zero = model.predict_hour(ts, config)
        flagged = flagged or used_zero
        points.append((ts, value))
    return Forecast(
        street_id=model.street_id,
        generated_at=from_ts,
        points=tuple(points),
        used_zero_fallback=flagged,
    )


def evaluate(model: ForecastModel, holdout: MovementSeries, config: Config) -> EvalReport:
    """MAE over present holdout points; MAPE over those with positive actuals."""
    abs_errors: list[float] = []
    pct_errors: list[float] = []
    for ts, actual in holdout.points:
        if actual is None:
            continue
        predicted, _ = model.predict_hour(ts, config)
        abs_errors.append(abs(predicted - actual))
        if actual > 0:
            pct_errors.append(abs(predicted - actual) / actual)
    if not abs_errors:
        raise InsufficientDataError(f"street {holdout.street_id!r} holdout is empty")
    return EvalReport(
        street_id=holdout.street_id,
        mae=sum(abs_errors) / len(abs_errors),
        mape=sum(pct_errors) / len(pct_errors) if pct_errors else None,
        n=len(abs_errors),
    )
