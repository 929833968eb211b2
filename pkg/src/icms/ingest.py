"""Feed parsing, vehicle-class filtering, and per-post segregation.

The wire format is JSON Lines, one object per line, shared by file replay and
HTTP batch bodies. Events referencing posts missing from the registry are
quarantined into a dead-letter list, never dropped silently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

from .core import (
    VEHICLE_CLASSES,
    DetectionEvent,
    IssueClass,
    ObjectClass,
    PedestrianCount,
    RadarReading,
    SmartPost,
    parse_instant,
)
from .errors import RecordParseError, SchemaError, ValidationError

FEED_KINDS = ("radar", "pedestrian", "detection")

Event = Union[RadarReading, PedestrianCount, DetectionEvent]
PostEvent = Union[RadarReading, PedestrianCount]


@dataclass(frozen=True)
class RawRecord:
    kind: str
    line: str


@dataclass(frozen=True)
class PostStreamBatch:
    """Immutable per-post event streams plus the quarantined dead-letter list."""

    streams: Mapping[str, tuple[PostEvent, ...]]
    dead_letter: tuple[PostEvent, ...] = ()

    def total_events(self) -> int:
        return sum(len(s) for s in self.streams.values()) + len(self.dead_letter)


def _require(obj: dict, key: str):
    if key not in obj:
        raise SchemaError(key)
    return obj[key]


def _decode_line(line: str) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RecordParseError(f"malformed JSON: {exc.msg}", offset=exc.pos)
    if not isinstance(obj, dict):
        raise RecordParseError("record must be a JSON object", offset=0)
    return obj


def parse_record(kind: str, line: str | dict) -> Event:
    """Parse one feed record into its validated event type.

    Accepts either the raw JSONL line or an already-decoded object. Radar
    classes outside the known vocabulary map to `other`; all other invariant
    violations raise.
    """
    if kind not in FEED_KINDS:
        raise ValidationError(f"unknown feed kind: {kind!r}")
    obj = _decode_line(line) if isinstance(line, str) else line

    if kind == "radar":
        speed = _require(obj, "speed_kmh")
        if not isinstance(speed, (int, float)) or isinstance(speed, bool):
            raise ValidationError(f"speed_kmh must be a number, got {speed!r}")
        return RadarReading(
            post_id=str(_require(obj, "post_id")),
            timestamp=parse_instant(str(_require(obj, "ts"))),
            object_class=ObjectClass.from_wire(str(_require(obj, "class"))),
            speed_kmh=float(speed),
        )

    if kind == "pedestrian":
        count = _require(obj, "count")
        if isinstance(count, bool) or not isinstance(count, int):
            raise ValidationError(f"count must be an integer, got {count!r}")
        return PedestrianCount(
            post_id=str(_require(obj, "post_id")),
            timestamp=parse_instant(str(_require(obj, "ts"))),
            count=count,
        )

    confidence = _require(obj, "confidence")
    if not isinstance(confidence, (int, float)) or isinstance(confidence, bool):
        raise ValidationError(f"confidence must be a number, got {confidence!r}")
    raw_class = str(_require(obj, "class"))
    try:
        detected = IssueClass(raw_class)
    except ValueError:
        raise ValidationError(f"unknown detection class: {raw_class!r}")
    image_ref = obj.get("image_ref")
    return DetectionEvent(
        source_id=str(_require(obj, "source_id")),
        timestamp=parse_instant(str(_require(obj, "ts"))),
        detected_class=detected,
        confidence=float(confidence),
        latitude=float(_require(obj, "lat")),
        longitude=float(_require(obj, "lon")),
        image_ref=None if image_ref is None else str(image_ref),
    )


def parse_feed(kind: str, text: str) -> list[Event]:
    """Parse a JSONL body; blank lines are skipped, errors carry the line number."""
    events: list[Event] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            events.append(parse_record(kind, line))
        except (RecordParseError, ValidationError) as exc:
            raise _with_line(exc, lineno)
    return events


def _with_line(exc: Exception, lineno: int) -> Exception:
    exc.args = (f"line {lineno}: {exc.args[0]}",) + exc.args[1:]
    return exc


def filter_vehicle_classes(readings: Iterable[RadarReading]) -> list[RadarReading]:
    """Keep exactly the light/heavy vehicle readings, order preserved."""
    return [r for r in readings if r.object_class in VEHICLE_CLASSES]


def segregate_by_post(
    events: Sequence[PostEvent],
    registry: Mapping[str, SmartPost],
) -> PostStreamBatch:
    """Partition events by post_id, each stream sorted by timestamp (stable).

    Events whose post_id is not in the registry go to the dead-letter list in
    input order. Union of outputs equals the input as a multiset.
    """
    streams: dict[str, list[PostEvent]] = {}
    dead: list[PostEvent] = []
    for event in events:
        if event.post_id in registry:
            streams.setdefault(event.post_id, []).append(event)
        else:
            dead.append(event)
    return PostStreamBatch(
        streams={
            post_id: tuple(sorted(stream, key=lambda e: e.timestamp))
            for post_id, stream in streams.items()
        },
        dead_letter=tuple(dead),
    )
