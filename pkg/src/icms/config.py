"""Runtime configuration: a single JSON document with fail-fast validation.

Unknown keys are rejected outright. Every field has a documented default, so
an empty document is a valid configuration.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from datetime import date
from functools import lru_cache
from pathlib import Path
from typing import Any, Mapping
from zoneinfo import ZoneInfo

from .errors import ConfigError


@dataclass(frozen=True)
class Config:
    cadence: int = 15                       # window length, minutes; must divide 60
    night_window: tuple[int, int] = (22, 6)  # local hours [start, end), wraps midnight
    speeding_ratio_threshold: float = 1.0
    frequency_horizon_days: int = 7
    frequency_bands: tuple[int, int] = (3, 10)
    dedup_radius_m: float = 25.0
    max_gap_hours: int = 3
    outlier_k: float = 3.0
    dim_level: float = 0.3
    min_block_hours: int = 1
    urgency_cuts: tuple[float, float] = (0.5, 0.8)
    holidays: tuple[date, ...] = ()
    timezone: str = "Europe/Lisbon"

    @property
    def tz(self) -> ZoneInfo:
        return _zone(self.timezone)

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "cadence": self.cadence,
            "night_window": list(self.night_window),
            "speeding_ratio_threshold": self.speeding_ratio_threshold,
            "frequency_horizon_days": self.frequency_horizon_days,
            "frequency_bands": list(self.frequency_bands),
            "dedup_radius_m": self.dedup_radius_m,
            "max_gap_hours": self.max_gap_hours,
            "outlier_k": self.outlier_k,
            "dim_level": self.dim_level,
            "min_block_hours": self.min_block_hours,
            "urgency_cuts": list(self.urgency_cuts),
            "holidays": [d.isoformat() for d in self.holidays],
            "timezone": self.timezone,
        }


@lru_cache(maxsize=None)
def _zone(name: str) -> ZoneInfo:
    return ZoneInfo(name)


def _as_int(raw: Any, field: str) -> int:
    if isinstance(raw, bool) or not isinstance(raw, int):
        raise ConfigError(f"{field} must be an integer, got {raw!r}")
    return raw


def _as_number(raw: Any, field: str) -> float:
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ConfigError(f"{field} must be a number, got {raw!r}")
    return float(raw)


def _as_pair(raw: Any, field: str) -> tuple[Any, Any]:
    if not isinstance(raw, (list, tuple)) or len(raw) != 2:
        raise ConfigError(f"{field} must be a pair, got {raw!r}")
    return (raw[0], raw[1])


def validate_config(raw: Mapping[str, Any] | Config | None = None) -> Config:
    """Validate a parsed config document; idempotent on already-valid configs."""
    if isinstance(raw, Config):
        raw = raw.to_json_dict()
    doc = dict(raw or {})

    known = {f.name for f in fields(Config)}
    for key in doc:
        if key not in known:
            raise ConfigError(f"unknown config key: {key}")

    merged = Config().to_json_dict() | doc

    cadence = _as_int(merged["cadence"], "cadence")
    if cadence <= 0 or 60 % cadence != 0:
        raise ConfigError("cadence must divide 60")

    nw_raw = _as_pair(merged["night_window"], "night_window")
    night_window = (_as_int(nw_raw[0], "night_window"), _as_int(nw_raw[1], "night_window"))
    for h in night_window:
        if not 0 <= h <= 23:
            raise ConfigError(f"night_window hours must be within [0, 23], got {h}")
    if night_window[0] == night_window[1]:
        raise ConfigError("night_window hours must differ")

    threshold = _as_number(merged["speeding_ratio_threshold"], "speeding_ratio_threshold")
    if threshold < 0:
        raise ConfigError("speeding_ratio_threshold must be >= 0")

    horizon = _as_int(merged["frequency_horizon_days"], "frequency_horizon_days")
    if horizon <= 0:
        raise ConfigError("frequency_horizon_days must be positive")

    fb_raw = _as_pair(merged["frequency_bands"], "frequency_bands")
    frequency_bands = (_as_int(fb_raw[0], "frequency_bands"), _as_int(fb_raw[1], "frequency_bands"))
    if not frequency_bands[0] < frequency_bands[1]:
        raise ConfigError("frequency_bands: cut points must be strictly increasing")

    dedup_radius = _as_number(merged["dedup_radius_m"], "dedup_radius_m")
    if dedup_radius <= 0:
        raise ConfigError("dedup_radius_m must be positive")

    max_gap = _as_int(merged["max_gap_hours"], "max_gap_hours")
    if max_gap <= 0:
        raise ConfigError("max_gap_hours must be positive")

    outlier_k = _as_number(merged["outlier_k"], "outlier_k")
    if outlier_k <= 0:
        raise ConfigError("outlier_k must be positive")

    dim_level = _as_number(merged["dim_level"], "dim_level")
    if not 0.0 < dim_level < 1.0:
        raise ConfigError("dim_level must be strictly between 0 and 1")

    min_block = _as_int(merged["min_block_hours"], "min_block_hours")
    if min_block <= 0:
        raise ConfigError("min_block_hours must be positive")

    uc_raw = _as_pair(merged["urgency_cuts"], "urgency_cuts")
    urgency_cuts = (_as_number(uc_raw[0], "urgency_cuts"), _as_number(uc_raw[1], "urgency_cuts"))
    if not urgency_cuts[0] < urgency_cuts[1]:
        raise ConfigError("urgency_cuts: cut points must be strictly increasing")
    for c in urgency_cuts:
        if not 0.0 < c < 1.0:
            raise ConfigError(f"urgency_cuts values must be within (0, 1), got {c}")

    holidays_raw = merged["holidays"]
    if not isinstance(holidays_raw, (list, tuple)):
        raise ConfigError(f"holidays must be a list of dates, got {holidays_raw!r}")
    holidays: list[date] = []
    for item in holidays_raw:
        if isinstance(item, date):
            holidays.append(item)
            continue
        try:
            holidays.append(date.fromisoformat(item))
        except (TypeError, ValueError):
            raise ConfigError(f"holidays entries must be YYYY-MM-DD dates, got {item!r}")

    tz_name = merged["timezone"]
    try:
        _zone(tz_name)
    except Exception:
        raise ConfigError(f"timezone is not a known IANA zone: {tz_name!r}")

    return Config(
        cadence=cadence,
        night_window=night_window,
        speeding_ratio_threshold=threshold,
        frequency_horizon_days=horizon,
        frequency_bands=frequency_bands,
        dedup_radius_m=dedup_radius,
        max_gap_hours=max_gap,
        outlier_k=outlier_k,
        dim_level=dim_level,
        min_block_hours=min_block,
        urgency_cuts=urgency_cuts,
        holidays=tuple(sorted(holidays)),
        timezone=tz_name,
    )


def load_config(path: str | Path) -> Config:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}")
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    return validate_config(doc)
