"""Shared domain model: smart posts, raw sensor events, calendar and geodesic helpers.

Timestamps are stored UTC everywhere; hour-of-day and day-type are local
concepts and are always computed in the configured timezone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, datetime, timezone
from enum import Enum
from typing import Collection, Iterable

from .errors import ValidationError

UTC = timezone.utc
EARTH_RADIUS_M = 6_371_000.0


class ObjectClass(str, Enum):
    """Radar object classification; anything the radar emits outside the two
    vehicle classes collapses to OTHER rather than erroring."""

    LIGHT_VEHICLE = "light_vehicle"
    HEAVY_VEHICLE = "heavy_vehicle"
    OTHER = "other"

    @classmethod
    def from_wire(cls, raw: str) -> "ObjectClass":
        try:
            return cls(raw)
        except ValueError:
            return cls.OTHER


VEHICLE_CLASSES = frozenset({ObjectClass.LIGHT_VEHICLE, ObjectClass.HEAVY_VEHICLE})


class Severity(str, Enum):
    WARNING = "warning"
    DANGER = "danger"

    @property
    def rank(self) -> int:
        return 0 if self is Severity.WARNING else 1


class DayType(str, Enum):
    WORKDAY = "workday"
    WEEKEND = "weekend"


class IssueClass(str, Enum):
    POTHOLE = "pothole"
    FLOOD = "flood"
    FIRE = "fire"


class IssueStatus(str, Enum):
    OPEN = "open"
    ACKNOWLEDGED = "acknowledged"
    RESOLVED = "resolved"


class Urgency(str, Enum):
    ROUTINE = "routine"
    ELEVATED = "elevated"
    URGENT = "urgent"

    @property
    def rank(self) -> int:
        return ("routine", "elevated", "urgent").index(self.value)


def ensure_utc(ts: datetime, field: str = "timestamp") -> datetime:
    if ts.tzinfo is None:
        raise ValidationError(f"{field} must be timezone-aware")
    return ts.astimezone(UTC)


def parse_instant(text: str, field: str = "ts") -> datetime:
    """Parse an RFC 3339 instant; 'Z' suffix accepted."""
    try:
        ts = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except (ValueError, TypeError, AttributeError):
        raise ValidationError(f"{field} is not a valid RFC 3339 instant: {text!r}")
    return ensure_utc(ts, field)


def format_instant(ts: datetime) -> str:
    return ts.astimezone(UTC).isoformat().replace("+00:00", "Z")


def day_type(d: date, holidays: Collection[date]) -> DayType:
    """Weekend iff Saturday, Sunday, or a listed holiday; workday otherwise."""
    if d.weekday() >= 5 or d in holidays:
        return DayType.WEEKEND
    return DayType.WORKDAY


def haversine_m(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Great-circle distance in meters on a sphere of radius 6 371 000 m."""
    lat1, lon1 = math.radians(a[0]), math.radians(a[1])
    lat2, lon2 = math.radians(b[0]), math.radians(b[1])
    sin_dlat = math.sin((lat2 - lat1) / 2.0)
    sin_dlon = math.sin((lon2 - lon1) / 2.0)
    h = sin_dlat * sin_dlat + math.cos(lat1) * math.cos(lat2) * sin_dlon * sin_dlon
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def _check_coords(lat: float, lon: float) -> None:
    if not -90.0 <= lat <= 90.0:
        raise ValidationError(f"latitude must be within [-90, 90], got {lat}")
    if not -180.0 <= lon <= 180.0:
        raise ValidationError(f"longitude must be within [-180, 180], got {lon}")


@dataclass(frozen=True)
class SmartPost:
    """One instrumented lamp post: radar + pedestrian counter + luminaires."""

    post_id: str
    street_id: str
    latitude: float
    longitude: float
    speed_limit_kmh: int
    lamp_count: int = 1
    lamp_wattage_w: float = 80.0
    dimmable: bool = True

    def __post_init__(self):
        _check_coords(self.latitude, self.longitude)
        if self.speed_limit_kmh <= 0:
            raise ValidationError(f"speed_limit must be > 0, got {self.speed_limit_kmh}")
        if self.lamp_count < 0:
            raise ValidationError(f"lamp_count must be >= 0, got {self.lamp_count}")
        if self.lamp_wattage_w < 0:
            raise ValidationError(f"lamp_wattage must be >= 0, got {self.lamp_wattage_w}")

    @property
    def location(self) -> tuple[float, float]:
        return (self.latitude, self.longitude)

    def to_dict(self) -> dict:
        return {
            "post_id": self.post_id,
            "street_id": self.street_id,
            "lat": self.latitude,
            "lon": self.longitude,
            "speed_limit_kmh": self.speed_limit_kmh,
            "lamp_count": self.lamp_count,
            "lamp_wattage_w": self.lamp_wattage_w,
            "dimmable": self.dimmable,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "SmartPost":
        try:
            return cls(
                post_id=str(raw["post_id"]),
                street_id=str(raw["street_id"]),
                latitude=float(raw["lat"]),
                longitude=float(raw["lon"]),
                speed_limit_kmh=int(raw["speed_limit_kmh"]),
                lamp_count=int(raw.get("lamp_count", 1)),
                lamp_wattage_w=float(raw.get("lamp_wattage_w", 80.0)),
                dimmable=bool(raw.get("dimmable", True)),
            )
        except KeyError as exc:
            raise ValidationError(f"post record missing field {exc.args[0]!r}")


@dataclass(frozen=True)
class RadarReading:
    post_id: str
    timestamp: datetime
    object_class: ObjectClass
    speed_kmh: float

    def __post_init__(self):
        object.__setattr__(self, "timestamp", ensure_utc(self.timestamp))
        if self.speed_kmh < 0:
            raise ValidationError(f"speed must be >= 0, got {self.speed_kmh}")


@dataclass(frozen=True)
class PedestrianCount:
    """Pedestrians observed since the previous reading of the same counter."""

    post_id: str
    timestamp: datetime
    count: int

    def __post_init__(self):
        object.__setattr__(self, "timestamp", ensure_utc(self.timestamp))
        if self.count < 0:
            raise ValidationError(f"count must be >= 0, got {self.count}")


@dataclass(frozen=True)
class DetectionEvent:
    """One confidence-scored infrastructure defect sighting from a mobile camera."""

    source_id: str
    timestamp: datetime
    detected_class: IssueClass
    confidence: float
    latitude: float
    longitude: float
    image_ref: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "timestamp", ensure_utc(self.timestamp))
        if not 0.0 <= self.confidence <= 1.0:
            raise ValidationError(f"confidence must be within [0, 1], got {self.confidence}")
        _check_coords(self.latitude, self.longitude)

    @property
    def location(self) -> tuple[float, float]:
        return (self.latitude, self.longitude)


def streets_of(posts: Iterable[SmartPost]) -> dict[str, list[SmartPost]]:
    """Group a post registry by street, preserving input order within a street."""
    out: dict[str, list[SmartPost]] = {}
    for post in posts:
        out.setdefault(post.street_id, []).append(post)
    return out
