"""Street movement series: hourly counts of everything that moves, and the
cleaning pass that removes outliers, short gaps, and duplicate hours.

Unlike the safety pipeline, movement counts every radar return regardless of
object class: the lighting question is whether anything moved at all.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Iterable, Mapping, Optional, Sequence

from ..config import Config
from ..core import PedestrianCount, RadarReading, SmartPost, ensure_utc
from ..errors import InsufficientDataError, ValidationError

HOUR = timedelta(hours=1)

# outlier replacement reruns until no value sits outside the fence, so that
# cleaning an already-clean series is a no-op; the cap only guards against
# pathological float oscillation
_MAX_OUTLIER_PASSES = 100


@dataclass(frozen=True)
class MovementSeries:
    """Hourly (timestamp, count) points for one street; None marks missing."""

    street_id: str
    points: tuple[tuple[datetime, Optional[float]], ...]

    def __post_init__(self):
        previous = None
        for ts, count in self.points:
            if ts.tzinfo is None:
                raise ValidationError("series timestamps must be timezone-aware")
            if ts.minute or ts.second or ts.microsecond:
                raise ValidationError(f"series timestamps must be on the hour grid: {ts}")
            if previous is not None and ts <= previous:
                raise ValidationError("series timestamps must be strictly increasing")
            if count is not None and count < 0:
                raise ValidationError(f"movement counts must be >= 0, got {count}")
            previous = ts

    def present_values(self) -> list[float]:
        return [c for _, c in self.points if c is not None]


def floor_hour(ts: datetime) -> datetime:
    ts = ensure_utc(ts)
    return ts.replace(minute=0, second=0, microsecond=0)


def build_street_series(
    street_id: str,
    posts: Mapping[str, SmartPost],
    radar: Iterable[RadarReading],
    pedestrians: Iterable[PedestrianCount],
    start: datetime,
    end: datetime,
) -> MovementSeries:
    """Movement counts per hour over [start, end): radar returns of any class
    plus pedestrian counts, for every post on the street.

    Hours inside the range with no events count as zero movement; the sensors
    were live, nothing moved.
    """
    street_posts = {pid for pid, p in posts.items() if p.street_id == street_id}
    start, end = floor_hour(start), ensure_utc(end)
    totals: dict[datetime, float] = {}
    cursor = start
    while cursor < end:
        totals[cursor] = 0.0
        cursor += HOUR
    for reading in radar:
        if reading.post_id in street_posts:
            hour = floor_hour(reading.timestamp)
            if hour in totals:
                totals[hour] += 1.0
    for ped in pedestrians:
        if ped.post_id in street_posts:
            hour = floor_hour(ped.timestamp)
            if hour in totals:
                totals[hour] += float(ped.count)
    return MovementSeries(
        street_id=street_id,
        points=tuple(sorted(totals.items())),
    )


def _quartiles(values: Sequence[float]) -> tuple[float, float]:
    """Lower-order-statistic quartiles: the sorted element at floor(q * (n-1))."""
    ordered = sorted(values)
    n = len(ordered)
    q1 = ordered[int(0.25 * (n - 1))]
    q3 = ordered[int(0.75 * (n - 1))]
    return q1, q3


def _interpolate(
    index: int,
    values: list[Optional[float]],
    usable: list[bool],
) -> Optional[float]:
    """Linear interpolation between the nearest usable neighbors on each side;
    one-sided neighbors are copied; returns None when no neighbor exists."""
    left = next((i for i in range(index - 1, -1, -1) if usable[i]), None)
    right = next((i for i in range(index + 1, len(values)) if usable[i]), None)
    if left is None and right is None:
        return None
    if left is None:
        return values[right]
    if right is None:
        return values[left]
    span = right - left
    fraction = (index - left) / span
    return values[left] + (values[right] - values[left]) * fraction


def preprocess_series(raw: MovementSeries, config: Config) -> MovementSeries:
    """Clean a movement series: collapse duplicate hours to their mean, replace
    IQR-fenced outliers by interpolation of their nearest sound neighbors, and
    fill missing runs no longer than the configured gap.

    Longer gaps stay missing. The result is a fixpoint: preprocessing it again
    returns an equal series.
    """
    # collapse duplicates (the only invariant violation tolerated on input)
    collapsed: dict[datetime, list[float]] = {}
    order: list[datetime] = []
    for ts, count in raw.points:
        if ts not in collapsed:
            collapsed[ts] = []
            order.append(ts)
        if count is not None:
            collapsed[ts].append(count)
    order.sort()

    if not order:
        raise InsufficientDataError(f"street {raw.street_id!r} has no data points")

    # expand to the full hour grid between the first and last timestamp
    hours: list[datetime] = []
    cursor, last = order[0], order[-1]
    while cursor <= last:
        hours.append(cursor)
        cursor += HOUR
    values: list[Optional[float]] = [
        (sum(vs) / len(vs) if (vs := collapsed.get(ts)) else None) for ts in hours
    ]

    present = [v for v in values if v is not None]
    if len(present) < 4:
        raise InsufficientDataError(
            f"street {raw.street_id!r} has {len(present)} present points; "
            "need at least 4 for quartiles"
        )

    filled_gaps = False
    for _ in range(_MAX_OUTLIER_PASSES):
        present = [v for v in values if v is not None]
        q1, q3 = _quartiles(present)
        fence = config.outlier_k * (q3 - q1)
        low, high = q1 - fence, q3 + fence
        flagged = [v is not None and not low <= v <= high for v in values]
        if not any(flagged):
            if filled_gaps:
                break
        usable = [v is not None and not f for v, f in zip(values, flagged)]
        for i, is_flagged in enumerate(flagged):
            if is_flagged:
                values[i] = _interpolate(i, values, usable)

        if not filled_gaps:
            # fill short missing runs once; interior runs always have both flanks
            i = 0
            while i < len(values):
                if values[i] is not None:
                    i += 1
                    continue
                j = i
                while j < len(values) and values[j] is None:
                    j += 1
                run = j - i
                if run <= config.max_gap_hours and i > 0 and j < len(values):
                    usable = [v is not None for v in values]
                    for k in range(i, j):
                        values[k] = _interpolate(k, values, usable)
                i = j
            filled_gaps = True

    return MovementSeries(raw.street_id, tuple(zip(hours, values)))
