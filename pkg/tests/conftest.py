"""Shared fixtures: default configuration, a two-street post registry, event factories."""

from datetime import datetime, timezone

import pytest
from hypothesis import HealthCheck, settings

from icms.config import Config, validate_config
from icms.core import (
    DetectionEvent,
    IssueClass,
    ObjectClass,
    PedestrianCount,
    RadarReading,
    SmartPost,
    format_instant,
)

settings.register_profile(
    "suite", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("suite")


def utc(*args: int) -> datetime:
    return datetime(*args, tzinfo=timezone.utc)


def mk_radar(post_id: str, ts: datetime, speed: float, cls: ObjectClass = ObjectClass.LIGHT_VEHICLE) -> RadarReading:
    return RadarReading(post_id=post_id, timestamp=ts, object_class=cls, speed_kmh=speed)


def mk_ped(post_id: str, ts: datetime, count: int) -> PedestrianCount:
    return PedestrianCount(post_id=post_id, timestamp=ts, count=count)


def mk_detection(
    lat: float,
    lon: float,
    confidence: float,
    ts: datetime = None,
    cls: IssueClass = IssueClass.POTHOLE,
    source: str = "patrol-1",
) -> DetectionEvent:
    return DetectionEvent(
        source_id=source,
        timestamp=ts or utc(2023, 3, 5, 10, 0, 0),
        detected_class=cls,
        confidence=confidence,
        latitude=lat,
        longitude=lon,
        image_ref=None,
    )


# Wire-format builders for feed objects as they arrive over HTTP / JSONL.


def radar_obj(post_id: str, ts: datetime, speed: float, cls: str = "light_vehicle") -> dict:
    return {"post_id": post_id, "ts": format_instant(ts), "class": cls, "speed_kmh": speed}


def ped_obj(post_id: str, ts: datetime, count: int) -> dict:
    return {"post_id": post_id, "ts": format_instant(ts), "count": count}


def detection_obj(
    lat: float,
    lon: float,
    confidence: float,
    ts: datetime,
    cls: str = "pothole",
    source: str = "patrol-1",
    image: str = None,
) -> dict:
    obj = {
        "source_id": source,
        "ts": format_instant(ts),
        "class": cls,
        "confidence": confidence,
        "lat": lat,
        "lon": lon,
    }
    if image is not None:
        obj["image_ref"] = image
    return obj


@pytest.fixture
def config() -> Config:
    return validate_config({})


@pytest.fixture
def posts() -> list[SmartPost]:
    return [
        SmartPost("AV-01-P1", "AV-01", 40.6405, -8.6538, 50, 10, 100.0, True),
        SmartPost("AV-01-P2", "AV-01", 40.6410, -8.6530, 50, 6, 120.0, True),
        SmartPost("RN-02-P1", "RN-02", 40.6440, -8.6500, 30, 4, 80.0, False),
    ]


@pytest.fixture
def posts_map(posts) -> dict[str, SmartPost]:
    return {p.post_id: p for p in posts}
