"""Deterministic synthetic city dataset generator.

Seeded generation of two-month feed recordings with planted structure:
per-street day-type x hour movement patterns, rush-hour speeding, nightly
zero-activity stretches, and spatially clustered detections. Every planted
fact is written to a truth sidecar so tests can compare engine output
against generation-time bookkeeping instead of re-deriving it.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path

from .config import Config
from .core import UTC, DayType, day_type, format_instant
from .energy.lighting import in_night_window
from .errors import ValidationError
from .maintenance import urgency_band

BASE_LAT = 40.6405
BASE_LON = -8.6538
# one degree of latitude ~ 111.19 km on the reference sphere
_DEG_LAT_M = 111_194.93
_CLUSTER_MAX_CONF = (0.41, 0.62, 0.95)
_OTHER_CLASSES = ("bicycle", "scooter", "animal")

DATASET_FILES = ("posts.jsonl", "radar.jsonl", "pedestrians.jsonl", "detections.jsonl", "rules.json")

_DEFAULT_RULES = [
    {"name": "any speeding", "text": "speeding_count >= 1 -> warning", "enabled": True},
    {
        "name": "speeding wave",
        "text": "speeding_count >= 2 AND avg_speed > 45 -> danger",
        "enabled": True,
    },
    {
        "name": "night crowd",
        "text": "pedestrian_count >= 6 AND (hour_of_day >= 22 OR hour_of_day < 6) -> warning",
        "enabled": True,
    },
    # kept disabled: proves disabled rules contribute nothing to replay totals
    {"name": "everything", "text": "vehicle_count >= 0 -> danger", "enabled": False},
]


@dataclass(frozen=True)
class DatasetProfile:
    seed: int
    streets: int = 3
    posts_per_street: int = 2
    months: int = 2
    noise_sigma: float = 0.0
    detection_clusters: int = 3
    start: datetime = datetime(2023, 3, 1, tzinfo=UTC)

    def __post_init__(self):
        if self.streets < 1:
            raise ValidationError("profile needs at least one street")
        if self.posts_per_street < 1:
            raise ValidationError("profile needs at least one post per street")
        if self.months < 1:
            raise ValidationError("profile needs at least one month")
        if self.noise_sigma < 0:
            raise ValidationError("noise_sigma must be >= 0")
        if self.detection_clusters < 0:
            raise ValidationError("detection_clusters must be >= 0")

    @property
    def dataset_id(self) -> str:
        return (
            f"synth-s{self.seed}-{self.streets}x{self.posts_per_street}"
            f"-{self.months}m-n{self.noise_sigma:g}"
        )


def _add_months(ts: datetime, months: int) -> datetime:
    month_index = ts.month - 1 + months
    return ts.replace(year=ts.year + month_index // 12, month=month_index % 12 + 1)


def range_of(profile: DatasetProfile) -> tuple[datetime, datetime, datetime]:
    """(start, train/holdout boundary, end) for the profile."""
    start = profile.start
    end = _add_months(start, profile.months)
    if profile.months >= 2:
        boundary = _add_months(start, 1)
    else:
        total_hours = int((end - start) / timedelta(hours=1))
        boundary = start + timedelta(hours=total_hours // 2)
    return start, boundary, end


def _street_pattern(rng: random.Random, plant_zero_night: bool) -> dict[DayType, list[int]]:
    """Integer movement counts per local hour; hours 1-4 are the plantable
    zero stretch, and their neighbors stay nonzero so blocks cannot extend."""
    workday = [0] * 24
    workday[0] = 2 + rng.randrange(2)
    for h in range(1, 5):
        workday[h] = 0 if plant_zero_night else 1 + rng.randrange(2)
    workday[5] = 1 + rng.randrange(2)
    workday[6], workday[7] = 4 + rng.randrange(3), 8 + rng.randrange(4)
    for h in (8, 9):
        workday[h] = 14 + rng.randrange(7)
    for h in range(10, 17):
        workday[h] = 8 + rng.randrange(5)
    for h in (17, 18, 19):
        workday[h] = 15 + rng.randrange(7)
    workday[20], workday[21] = 6 + rng.randrange(3), 4 + rng.randrange(3)
    workday[22], workday[23] = 3, 2

    weekend = list(workday)
    for h in range(6, 22):
        weekend[h] = max(1, int(workday[h] * 0.6))
    return {DayType.WORKDAY: workday, DayType.WEEKEND: weekend}


def _scan_zero_blocks(
    street_id: str,
    hourly: list[tuple[datetime, int]],
    config: Config,
) -> list[dict]:
    """Generation-time bookkeeping of the planted zero stretches: a plain
    linear scan over the emitted counts, kept independent of the engine."""
    blocks = []
    run_start = None
    run_len = 0
    for ts, count in hourly:
        hour = ts.astimezone(config.tz).hour
        if in_night_window(hour, config.night_window) and count == 0:
            if run_start is None:
                run_start, run_len = ts, 1
            else:
                run_len += 1
        else:
            if run_start is not None and run_len >= config.min_block_hours:
                blocks.append(
                    {
                        "street_id": street_id,
                        "start": format_instant(run_start),
                        "length_hours": run_len,
                    }
                )
            run_start, run_len = None, 0
    if run_start is not None and run_len >= config.min_block_hours:
        blocks.append(
            {
                "street_id": street_id,
                "start": format_instant(run_start),
                "length_hours": run_len,
            }
        )
    return blocks


def generate_dataset(profile: DatasetProfile, out_dir: Path, config: Config = Config()) -> Path:
    """Write the dataset files and truth sidecar; returns the directory."""
    rng = random.Random(profile.seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    start, boundary, end = range_of(profile)

    street_ids = [f"ST-{i + 1:02d}" for i in range(profile.streets)]
    # last street gets live nights so at least one street has no blocks
    planted = {
        sid: (i < profile.streets - 1) or profile.streets == 1
        for i, sid in enumerate(street_ids)
    }
    patterns = {sid: _street_pattern(rng, planted[sid]) for sid in street_ids}
    limits = {sid: rng.choice((30, 50, 50, 60)) for sid in street_ids}

    posts: list[dict] = []
    posts_by_street: dict[str, list[str]] = {sid: [] for sid in street_ids}
    for i, sid in enumerate(street_ids):
        dimmable = i != 1   # second street exercises the half-off action
        for j in range(profile.posts_per_street):
            post_id = f"{sid}-P{j + 1}"
            posts.append(
                {
                    "post_id": post_id,
                    "street_id": sid,
                    "lat": round(BASE_LAT + i * 0.004 + j * 0.0006, 6),
                    "lon": round(BASE_LON + i * 0.001 + j * 0.0008, 6),
                    "speed_limit_kmh": limits[sid],
                    "lamp_count": 1 + rng.randrange(2),
                    "lamp_wattage_w": float(rng.choice((60, 80, 100))),
                    "dimmable": dimmable,
                }
            )
            posts_by_street[sid].append(post_id)

    radar_lines: list[str] = []
    ped_lines: list[str] = []
    truth_speeding = {p["post_id"]: 0 for p in posts}
    truth_hourly: dict[str, list[tuple[datetime, int]]] = {sid: [] for sid in street_ids}

    hours = int((end - start) / timedelta(hours=1))
    for h in range(hours):
        hour_ts = start + timedelta(hours=h)
        local = hour_ts.astimezone(config.tz)
        dt = day_type(local.date(), config.holidays)
        rush = dt is DayType.WORKDAY and local.hour in (8, 18)
        for sid in street_ids:
            base = patterns[sid][dt][local.hour]
            count = base
            if profile.noise_sigma > 0:
                count = max(0, round(base + rng.gauss(0.0, profile.noise_sigma)))
            truth_hourly[sid].append((hour_ts, count))
            if count == 0:
                continue
            peds = int(count * 0.35)
            vehicles = int((count - peds) * 0.75)
            other = count - peds - vehicles
            post_ids = posts_by_street[sid]
            limit = limits[sid]

            for _ in range(vehicles):
                speeding = rng.random() < (0.4 if rush else 0.05)
                if speeding:
                    speed = limit + 5 + abs(rng.gauss(0.0, 6.0))
                else:
                    speed = max(5.0, limit - 10 + rng.gauss(0.0, 4.0))
                    if speed > limit:
                        speed = float(limit)
                cls = "heavy_vehicle" if rng.random() < 0.15 else "light_vehicle"
                post_id = rng.choice(post_ids)
                if speed > limit:
                    truth_speeding[post_id] += 1
                radar_lines.append(
                    json.dumps(
                        {
                            "post_id": post_id,
                            "ts": _instant_in_hour(rng, hour_ts),
                            "class": cls,
                            "speed_kmh": round(speed, 1),
                        },
                        separators=(",", ":"),
                    )
                )
            for _ in range(other):
                radar_lines.append(
                    json.dumps(
                        {
                            "post_id": rng.choice(post_ids),
                            "ts": _instant_in_hour(rng, hour_ts),
                            "class": rng.choice(_OTHER_CLASSES),
                            "speed_kmh": round(8 + rng.random() * 14, 1),
                        },
                        separators=(",", ":"),
                    )
                )
            remaining = peds
            for idx, post_id in enumerate(post_ids):
                share = remaining if idx == len(post_ids) - 1 else rng.randint(0, remaining)
                remaining -= share
                if share > 0:
                    ped_lines.append(
                        json.dumps(
                            {
                                "post_id": post_id,
                                "ts": _instant_in_hour(rng, hour_ts),
                                "count": share,
                            },
                            separators=(",", ":"),
                        )
                    )

    detection_lines, truth_clusters = _generate_detections(rng, profile, config, start, end)

    truth = {
        "dataset_id": profile.dataset_id,
        "pattern": {
            sid: {dt.value: patterns[sid][dt] for dt in DayType} for sid in street_ids
        },
        "zero_blocks": [
            block
            for sid in street_ids
            for block in _scan_zero_blocks(sid, truth_hourly[sid], config)
        ],
        "speeding_by_post": truth_speeding,
        "detection_clusters": truth_clusters,
        "counts": {
            "radar": len(radar_lines),
            "pedestrians": len(ped_lines),
            "detections": len(detection_lines),
        },
    }

    manifest = {
        "dataset_id": profile.dataset_id,
        "seed": profile.seed,
        "profile": {
            "streets": profile.streets,
            "posts_per_street": profile.posts_per_street,
            "months": profile.months,
            "noise_sigma": profile.noise_sigma,
            "detection_clusters": profile.detection_clusters,
        },
        "start": format_instant(start),
        "boundary": format_instant(boundary),
        "end": format_instant(end),
        "files": list(DATASET_FILES),
    }

    _write(out / "posts.jsonl", "\n".join(json.dumps(p, separators=(",", ":")) for p in posts))
    _write(out / "radar.jsonl", "\n".join(radar_lines))
    _write(out / "pedestrians.jsonl", "\n".join(ped_lines))
    _write(out / "detections.jsonl", "\n".join(detection_lines))
    _write(out / "rules.json", json.dumps(_DEFAULT_RULES, indent=2, sort_keys=True))
    _write(out / "truth.json", json.dumps(truth, indent=2, sort_keys=True))
    _write(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True))
    return out


def _instant_in_hour(rng: random.Random, hour_ts: datetime) -> str:
    return format_instant(
        hour_ts + timedelta(minutes=rng.randrange(60), seconds=rng.randrange(60))
    )


def _generate_detections(
    rng: random.Random,
    profile: DatasetProfile,
    config: Config,
    start: datetime,
    end: datetime,
) -> tuple[list[str], list[dict]]:
    classes = ("pothole", "flood", "fire")
    events: list[dict] = []
    clusters: list[dict] = []
    total_hours = int((end - start) / timedelta(hours=1))
    for c in range(profile.detection_clusters):
        cls = classes[c % len(classes)]
        # anchors sit ~350 m apart, far beyond the dedup radius
        anchor_lat = BASE_LAT + 0.02 + c * 0.0032
        anchor_lon = BASE_LON - 0.015 + c * 0.0030
        size = 3 + rng.randrange(4)
        max_conf = _CLUSTER_MAX_CONF[c % len(_CLUSTER_MAX_CONF)]
        confidences = [max_conf] + [
            round(rng.uniform(0.10, max_conf - 0.05), 2) for _ in range(size - 1)
        ]
        rng.shuffle(confidences)
        cluster_events = []
        for k, conf in enumerate(confidences):
            # +-6 m of jitter: any sighting stays within the 25 m dedup radius
            # of whichever cluster member happens to open the issue
            dlat = rng.uniform(-6, 6) / _DEG_LAT_M
            dlon = rng.uniform(-6, 6) / _DEG_LAT_M
            ts = start + timedelta(
                hours=rng.randrange(total_hours), minutes=rng.randrange(60)
            )
            cluster_events.append(
                {
                    "source_id": f"patrol-{c + 1}",
                    "ts": format_instant(ts),
                    "class": cls,
                    "confidence": conf,
                    "lat": round(anchor_lat + dlat, 7),
                    "lon": round(anchor_lon + dlon, 7),
                    "image_ref": f"frames/patrol-{c + 1}/{k:03d}.jpg",
                }
            )
        cluster_events.sort(key=lambda e: e["ts"])
        events.extend(cluster_events)
        clusters.append(
            {
                "class": cls,
                "anchor_lat": round(anchor_lat, 7),
                "anchor_lon": round(anchor_lon, 7),
                "count": size,
                "max_confidence": max_conf,
                "expected_urgency": urgency_band(max_conf, config.urgency_cuts).value,
            }
        )
    events.sort(key=lambda e: e["ts"])
    return [json.dumps(e, separators=(",", ":")) for e in events], clusters


def _write(path: Path, body: str) -> None:
    path.write_text(body + ("\n" if body else ""), encoding="utf-8", newline="\n")


def dataset_hash(dataset_dir: Path) -> str:
    """Content hash over the feed files, independent of directory location."""
    h = hashlib.sha256()
    for name in DATASET_FILES:
        h.update(name.encode("utf-8"))
        h.update(b"\x00")
        path = Path(dataset_dir) / name
        h.update(path.read_bytes() if path.exists() else b"")
        h.update(b"\x00")
    return h.hexdigest()
