"""Cadence-aligned window features: the per-post aggregates that rules evaluate.

The window grid is anchored at local midnight of the Unix epoch in the
configured timezone. Because the cadence divides 60 and zone offsets are
whole hours, every window start lands on a multiple of the cadence past the
hour.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Iterable, Mapping, Optional, Sequence
from zoneinfo import ZoneInfo

from ..config import Config
from ..core import UTC, PedestrianCount, RadarReading, SmartPost, ensure_utc
from ..errors import ValidationError
from ..ingest import filter_vehicle_classes


def grid_epoch(tz: ZoneInfo) -> datetime:
    return datetime(1970, 1, 1, tzinfo=tz)


def window_index(ts: datetime, cadence_min: int, epoch: datetime) -> datetime:
    """Largest grid instant <= ts on the cadence grid anchored at epoch.

    The floor runs in UTC: adding a timedelta to a zone-aware datetime is
    wall-clock arithmetic and would drag the anchor's historical UTC offset
    into the result.
    """
    ts = ensure_utc(ts)
    anchor = epoch.astimezone(UTC)
    step = timedelta(minutes=cadence_min)
    return anchor + (ts - anchor) // step * step


@dataclass(frozen=True)
class WindowFeatures:
    post_id: str
    window_start: datetime
    avg_speed: Optional[float]
    vehicle_count: int
    speeding_count: int
    pedestrian_count: int
    hour_of_day: int

    def __post_init__(self):
        object.__setattr__(self, "window_start", ensure_utc(self.window_start, "window_start"))
        if self.speeding_count > self.vehicle_count:
            raise ValidationError("speeding_count must not exceed vehicle_count")
        if (self.avg_speed is None) != (self.vehicle_count == 0):
            raise ValidationError("avg_speed must be absent iff the window has no vehicles")
        if not 0 <= self.hour_of_day <= 23:
            raise ValidationError(f"hour_of_day must be within [0, 23], got {self.hour_of_day}")

    def as_mapping(self) -> dict[str, Optional[float]]:
        """Feature values by DSL identifier; absent avg_speed stays None."""
        return {
            "avg_speed": self.avg_speed,
            "vehicle_count": float(self.vehicle_count),
            "speeding_count": float(self.speeding_count),
            "pedestrian_count": float(self.pedestrian_count),
            "hour_of_day": float(self.hour_of_day),
        }


def compute_window_features(
    vehicles: Sequence[RadarReading],
    pedestrians: Sequence[PedestrianCount],
    post: SmartPost,
    window_start: datetime,
    config: Config,
) -> WindowFeatures:
    """Aggregate one post's events for one window.

    `vehicles` must already be class-filtered. Every event must fall inside
    [window_start, window_start + cadence) and belong to the post.
    """
    window_end = window_start + timedelta(minutes=config.cadence)
    for event in (*vehicles, *pedestrians):
        if event.post_id != post.post_id:
            raise ValidationError(
                f"event for post {event.post_id!r} passed to window of {post.post_id!r}"
            )
        if not window_start <= event.timestamp < window_end:
            raise ValidationError(
                f"event at {event.timestamp.isoformat()} outside window "
                f"[{window_start.isoformat()}, {window_end.isoformat()})"
            )

    speeds = [v.speed_kmh for v in vehicles]
    return WindowFeatures(
        post_id=post.post_id,
        window_start=window_start,
        avg_speed=sum(speeds) / len(speeds) if speeds else None,
        vehicle_count=len(speeds),
        speeding_count=sum(1 for v in vehicles if v.speed_kmh > post.speed_limit_kmh),
        pedestrian_count=sum(p.count for p in pedestrians),
        hour_of_day=window_start.astimezone(config.tz).hour,
    )


def build_window_features(
    radar: Iterable[RadarReading],
    pedestrians: Iterable[PedestrianCount],
    posts: Mapping[str, SmartPost],
    config: Config,
) -> list[WindowFeatures]:
    """Window every post's streams; windows with no events emit no features.

    Radar readings outside the two vehicle classes are discarded here, per
    the processing pipeline. Output is sorted by (window_start, post_id).
    """
    epoch = grid_epoch(config.tz)
    by_key_vehicles: dict[tuple[str, datetime], list[RadarReading]] = {}
    by_key_peds: dict[tuple[str, datetime], list[PedestrianCount]] = {}

    for reading in filter_vehicle_classes(radar):
        if reading.post_id not in posts:
            continue
        key = (reading.post_id, window_index(reading.timestamp, config.cadence, epoch))
        by_key_vehicles.setdefault(key, []).append(reading)
    for ped in pedestrians:
        if ped.post_id not in posts:
            continue
        key = (ped.post_id, window_index(ped.timestamp, config.cadence, epoch))
        by_key_peds.setdefault(key, []).append(ped)

    features = [
        compute_window_features(
            by_key_vehicles.get(key, []),
            by_key_peds.get(key, []),
            posts[key[0]],
            key[1],
            config,
        )
        for key in by_key_vehicles.keys() | by_key_peds.keys()
    ]
    features.sort(key=lambda f: (f.window_start, f.post_id))
    return features
