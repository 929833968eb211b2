"""Rule evaluation over windows, violation frequency bands, and the per-street
hourly speeding/pedestrian ratio."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta
from enum import Enum
from typing import Iterable, Mapping, Optional

from ..config import Config
from ..core import Severity, SmartPost, ensure_utc
from ..errors import NotFoundError, ValidationError
from .dsl import Rule, eval_expr
from .windows import WindowFeatures


class FrequencyBand(str, Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


@dataclass(frozen=True)
class Violation:
    rule_id: str
    post_id: str
    window_start: datetime
    severity: Severity
    feature_snapshot: WindowFeatures


@dataclass(frozen=True)
class FrequencyLevel:
    post_id: str
    rule_id: str
    count: int
    band: FrequencyBand


@dataclass(frozen=True)
class HourlyRatio:
    street_id: str
    speeding: tuple[int, ...]      # 24 totals by local hour of day
    pedestrians: tuple[int, ...]
    ratios: tuple[float, ...]
    exceeded: tuple[bool, ...]
    threshold: float


def eval_rule(rule: Rule, features: WindowFeatures) -> Optional[Severity]:
    """The rule's severity iff its expression holds on the window, else None."""
    if eval_expr(rule.parsed.expression, features.as_mapping()):
        return rule.severity
    return None


def evaluate_windows(
    rules: Iterable[Rule], features: Iterable[WindowFeatures]
) -> list[Violation]:
    """One violation per (enabled rule, window) pair that fires.

    Ordered by (window_start, rule_id), with post_id as the final tiebreak so
    evaluation over disjoint posts merges deterministically.
    """
    enabled = [r for r in rules if r.enabled]
    violations = [
        Violation(
            rule_id=rule.rule_id,
            post_id=window.post_id,
            window_start=window.window_start,
            severity=severity,
            feature_snapshot=window,
        )
        for window in features
        for rule in enabled
        if (severity := eval_rule(rule, window)) is not None
    ]
    violations.sort(key=lambda v: (v.window_start, v.rule_id, v.post_id))
    return violations


def frequency_level(
    violations: Iterable[Violation],
    post_id: str,
    rule_id: str,
    now: datetime,
    config: Config,
) -> FrequencyLevel:
    """Band the (post, rule) violation count over the trailing horizon.

    Counts window starts in (now - horizon, now]. Low below the first cut,
    medium from the first cut inclusive, high from the second.
    """
    now = ensure_utc(now, "now")
    horizon_start = now - timedelta(days=config.frequency_horizon_days)
    count = sum(
        1
        for v in violations
        if v.post_id == post_id
        and v.rule_id == rule_id
        and horizon_start < v.window_start <= now
    )
    low_cut, high_cut = config.frequency_bands
    if count < low_cut:
        band = FrequencyBand.LOW
    elif count < high_cut:
        band = FrequencyBand.MEDIUM
    else:
        band = FrequencyBand.HIGH
    return FrequencyLevel(post_id=post_id, rule_id=rule_id, count=count, band=band)


def hourly_speeding_ratio(
    street_id: str,
    start: datetime,
    end: datetime,
    features: Iterable[WindowFeatures],
    posts: Mapping[str, SmartPost],
    config: Config,
    threshold: Optional[float] = None,
) -> HourlyRatio:
    """Per hour of day: street speeding total over max(pedestrian total, 1).

    Aggregates every post on the street over window starts in [start, end).
    The clamped denominator keeps streets with speeding but no pedestrians on
    a finite, comparable scale.
    """
    street_posts = {p.post_id for p in posts.values() if p.street_id == street_id}
    if not street_posts:
        raise NotFoundError(f"unknown street: {street_id!r}")
    start, end = ensure_utc(start, "start"), ensure_utc(end, "end")
    if not start < end:
        raise ValidationError(f"empty date range: {start.isoformat()}..{end.isoformat()}")

    speeding = [0] * 24
    pedestrians = [0] * 24
    for window in features:
        if window.post_id in street_posts and start <= window.window_start < end:
            speeding[window.hour_of_day] += window.speeding_count
            pedestrians[window.hour_of_day] += window.pedestrian_count

    limit = config.speeding_ratio_threshold if threshold is None else threshold
    ratios = tuple(s / max(p, 1) for s, p in zip(speeding, pedestrians))
    return HourlyRatio(
        street_id=street_id,
        speeding=tuple(speeding),
        pedestrians=tuple(pedestrians),
        ratios=ratios,
        exceeded=tuple(r > limit for r in ratios),
        threshold=limit,
    )
