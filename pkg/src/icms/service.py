"""The engine container behind the HTTP service and the replay CLI.

One Engine owns all component state (rules, event stores, forecast models,
issue registry) plus the event log. Every mutation is validated, appended to
the log, and only then applied in memory, so recovery equals replay: the
same apply functions run over the logged records and must land on the same
state. Exports are canonical JSON and exclude wall-clock fields, which makes
recovered state byte-comparable.
"""

from __future__ import annotations

import json
from datetime import datetime
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence

from . import maintenance
from .config import Config
from .core import (
    UTC,
    DetectionEvent,
    IssueClass,
    IssueStatus,
    PedestrianCount,
    RadarReading,
    SmartPost,
    Urgency,
    format_instant,
    parse_instant,
)
from .energy import (
    HOUR,
    ActivityBlock,
    BlockBasis,
    Forecast,
    ForecastModel,
    MovementSeries,
    build_street_series,
    find_zero_blocks,
    fit_model,
    floor_hour,
    forecast_24h,
    preprocess_series,
    recommend,
)
from .errors import (
    InsufficientDataError,
    NotFoundError,
    RecordParseError,
    ValidationError,
)
from .eventlog import EventLog
from .ingest import FEED_KINDS, parse_record
from .maintenance import MaintenanceIssue, MaintenanceRegistry
from .safety import (
    Rule,
    Violation,
    WindowFeatures,
    build_window_features,
    evaluate_windows,
    hourly_speeding_ratio,
    parse_rule,
    pretty_print,
)


def _now_iso() -> str:
    return format_instant(datetime.now(UTC))


def features_to_dict(f: WindowFeatures) -> dict:
    return {
        "post_id": f.post_id,
        "window_start": format_instant(f.window_start),
        "avg_speed": f.avg_speed,
        "vehicle_count": f.vehicle_count,
        "speeding_count": f.speeding_count,
        "pedestrian_count": f.pedestrian_count,
        "hour_of_day": f.hour_of_day,
    }


def violation_to_dict(v: Violation) -> dict:
    return {
        "rule_id": v.rule_id,
        "post_id": v.post_id,
        "window_start": format_instant(v.window_start),
        "severity": v.severity.value,
        "features": features_to_dict(v.feature_snapshot),
    }


def rule_to_dict(r: Rule) -> dict:
    return {
        "rule_id": r.rule_id,
        "name": r.name,
        "text": r.text,
        "pretty": pretty_print(r.parsed),
        "severity": r.severity.value,
        "enabled": r.enabled,
    }


def model_to_dict(m: ForecastModel) -> dict:
    return {
        "street_id": m.street_id,
        "cells": {f"{dt.value}:{hour:02d}": mean for (dt, hour), mean in m.cells.items()},
        "fallbacks": {dt.value: mean for dt, mean in m.fallbacks.items()},
        "trained_from": format_instant(m.trained_from),
        "trained_to": format_instant(m.trained_to),
        "residual_std": m.residual_std,
        "n_points": m.n_points,
    }


def forecast_to_dict(fc: Forecast) -> dict:
    return {
        "street_id": fc.street_id,
        "generated_at": format_instant(fc.generated_at),
        "used_zero_fallback": fc.used_zero_fallback,
        "points": [
            {"ts": format_instant(ts), "predicted": value} for ts, value in fc.points
        ],
    }


def canonical_json(obj: Any) -> str:
    """The one serialization used for exports and golden files: sorted keys,
    compact separators, LF-terminated."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False) + "\n"


class Engine:
    """Single-writer facade over all component state.

    `log_path=None` runs fully in memory (the replay CLI path); with a path,
    every accepted mutation is durable before it is applied.
    """

    def __init__(
        self,
        config: Config,
        posts: Iterable[SmartPost] = (),
        log_path: Optional[Path] = None,
    ):
        self.config = config
        self.posts: dict[str, SmartPost] = {p.post_id: p for p in posts}
        self.radar: list[RadarReading] = []
        self.pedestrians: list[PedestrianCount] = []
        self.rules: dict[str, Rule] = {}
        self._rule_seq = 0
        self.registry = MaintenanceRegistry(config)
        self.models: dict[str, ForecastModel] = {}
        self.train_range: Optional[tuple[datetime, datetime]] = None
        self._log = EventLog(log_path) if log_path is not None else None
        self._gen = 0                   # bumped on radar/pedestrian ingest
        self._features_cache: Optional[tuple[int, list[WindowFeatures]]] = None

    # -- lifecycle -----------------------------------------------------------

    def start(self) -> int:
        """Open the log and replay it; returns the number of records applied."""
        if self._log is None:
            return 0
        records = self._log.open()
        for record in records:
            self._apply(record.kind, record.payload)
        return len(records)

    def close(self) -> None:
        if self._log is not None:
            self._log.close()

    @property
    def last_seq(self) -> int:
        return self._log.last_seq if self._log is not None else 0

    def _append(self, kind: str, payloads: list[Any]) -> None:
        if self._log is not None and payloads:
            self._log.append_many(kind, payloads, _now_iso())

    # -- record application (shared by live writes and recovery) --------------

    def _apply(self, kind: str, payload: Any) -> None:
        if kind in FEED_KINDS:
            self._apply_event(parse_record(kind, payload))
        elif kind == "rule_put":
            self._apply_rule_put(payload)
        elif kind == "rule_delete":
            self.rules.pop(payload["rule_id"], None)
        elif kind == "transition":
            self.registry.transition(payload["issue_id"], payload["action"])
        elif kind == "train":
            self._apply_train(parse_instant(payload["from"]), parse_instant(payload["to"]))
        else:
            raise RecordParseError(f"unknown log record kind: {kind!r}", offset=0)

    def _apply_event(self, event: Any) -> None:
        if isinstance(event, RadarReading):
            self.radar.append(event)
            self._gen += 1
        elif isinstance(event, PedestrianCount):
            self.pedestrians.append(event)
            self._gen += 1
        elif isinstance(event, DetectionEvent):
            self.registry.ingest_detection(event)
        else:  # pragma: no cover - parse_record only returns the three types
            raise ValidationError(f"unsupported event type {type(event).__name__}")

    def _apply_rule_put(self, payload: Mapping[str, Any]) -> Rule:
        rule_id = payload["rule_id"]
        rule = Rule(
            rule_id=rule_id,
            name=payload["name"],
            text=payload["text"],
            parsed=parse_rule(payload["text"]),
            enabled=bool(payload.get("enabled", True)),
        )
        self.rules[rule_id] = rule
        num = _rule_number(rule_id)
        if num is not None:
            self._rule_seq = max(self._rule_seq, num)
        return rule

    def _apply_train(self, from_ts: datetime, to_ts: datetime) -> dict:
        """Refit one model per street from the stored events in [from, to)."""
        trained, skipped = [], []
        for street_id in sorted({p.street_id for p in self.posts.values()}):
            series = build_street_series(
                street_id, self.posts, self.radar, self.pedestrians, from_ts, to_ts
            )
            try:
                clean = preprocess_series(series, self.config)
                self.models[street_id] = fit_model(clean, self.config)
            except InsufficientDataError as exc:
                skipped.append({"street_id": street_id, "reason": str(exc)})
                continue
            trained.append(model_to_dict(self.models[street_id]))
        self.train_range = (from_ts, to_ts)
        return {
            "from": format_instant(from_ts),
            "to": format_instant(to_ts),
            "models": trained,
            "skipped": skipped,
        }

    # -- ingestion ------------------------------------------------------------

    def ingest(self, kind: str, objects: Sequence[Any]) -> dict:
        """Validate a batch, persist the accepted records, then apply them.

        Records that fail validation or reference unknown posts are counted
        as quarantined and contribute no state; they are not persisted.
        """
        if kind not in FEED_KINDS:
            raise ValidationError(f"unknown feed kind: {kind!r}")
        accepted_events: list[Any] = []
        accepted_payloads: list[Any] = []
        quarantined = 0
        for obj in objects:
            if not isinstance(obj, Mapping):
                quarantined += 1
                continue
            try:
                event = parse_record(kind, dict(obj))
            except (ValidationError, RecordParseError):
                quarantined += 1
                continue
            if isinstance(event, (RadarReading, PedestrianCount)) and event.post_id not in self.posts:
                quarantined += 1
                continue
            accepted_events.append(event)
            accepted_payloads.append(dict(obj))
        self._append(kind, accepted_payloads)
        for event in accepted_events:
            self._apply_event(event)
        return {"accepted": len(accepted_events), "quarantined": quarantined}

    # -- safety ---------------------------------------------------------------

    def create_rule(self, name: str, text: str, enabled: bool = True) -> Rule:
        parse_rule(text)   # surface syntax errors before anything is logged
        rule_id = f"R-{self._rule_seq + 1:04d}"
        payload = {"rule_id": rule_id, "name": name, "text": text, "enabled": enabled}
        self._append("rule_put", [payload])
        return self._apply_rule_put(payload)

    def update_rule(self, rule_id: str, name: str, text: str, enabled: bool) -> Rule:
        if rule_id not in self.rules:
            raise NotFoundError(f"no rule with id {rule_id!r}")
        parse_rule(text)
        payload = {"rule_id": rule_id, "name": name, "text": text, "enabled": enabled}
        self._append("rule_put", [payload])
        return self._apply_rule_put(payload)

    def delete_rule(self, rule_id: str) -> None:
        if rule_id not in self.rules:
            raise NotFoundError(f"no rule with id {rule_id!r}")
        self._append("rule_delete", [{"rule_id": rule_id}])
        self.rules.pop(rule_id)

    def get_rule(self, rule_id: str) -> Rule:
        try:
            return self.rules[rule_id]
        except KeyError:
            raise NotFoundError(f"no rule with id {rule_id!r}")

    def list_rules(self) -> list[Rule]:
        return [self.rules[rid] for rid in sorted(self.rules)]

    def window_features(self) -> list[WindowFeatures]:
        if self._features_cache is None or self._features_cache[0] != self._gen:
            features = build_window_features(
                self.radar, self.pedestrians, self.posts, self.config
            )
            self._features_cache = (self._gen, features)
        return self._features_cache[1]

    def violations(
        self,
        post_id: Optional[str] = None,
        from_ts: Optional[datetime] = None,
        to_ts: Optional[datetime] = None,
    ) -> list[Violation]:
        """Derived view: the current enabled rules over all stored windows."""
        out = evaluate_windows(self.rules.values(), self.window_features())
        if post_id is not None:
            out = [v for v in out if v.post_id == post_id]
        if from_ts is not None:
            out = [v for v in out if v.window_start >= from_ts]
        if to_ts is not None:
            out = [v for v in out if v.window_start < to_ts]
        return out

    def ratio(
        self,
        street_id: str,
        from_ts: datetime,
        to_ts: datetime,
        threshold: Optional[float] = None,
    ):
        return hourly_speeding_ratio(
            street_id, from_ts, to_ts, self.window_features(), self.posts, self.config, threshold
        )

    # -- energy ---------------------------------------------------------------

    def streets(self) -> list[str]:
        return sorted({p.street_id for p in self.posts.values()})

    def _require_street(self, street_id: str) -> None:
        if street_id not in self.streets():
            raise NotFoundError(f"unknown street: {street_id!r}")

    def train(self, from_ts: datetime, to_ts: datetime) -> dict:
        if not from_ts < to_ts:
            raise ValidationError("train range must satisfy from < to")
        payload = {"from": format_instant(from_ts), "to": format_instant(to_ts)}
        self._append("train", [payload])
        return self._apply_train(from_ts, to_ts)

    def model_for(self, street_id: str) -> ForecastModel:
        self._require_street(street_id)
        model = self.models.get(street_id)
        if model is None:
            raise NotFoundError(f"no trained model for street {street_id!r}")
        return model

    def forecast(self, street_id: str) -> Forecast:
        """The 24 hours after the last trained observation; pure given the
        trained model, so repeated reads return identical bodies."""
        model = self.model_for(street_id)
        return forecast_24h(model, model.trained_to + HOUR, self.config)

    def observed_series(self, street_id: str) -> MovementSeries:
        """Raw per-hour movement over the street's full event range, zeros
        where the sensors saw nothing."""
        self._require_street(street_id)
        street_posts = {pid for pid, p in self.posts.items() if p.street_id == street_id}
        stamps = [e.timestamp for e in self.radar if e.post_id in street_posts]
        stamps += [e.timestamp for e in self.pedestrians if e.post_id in street_posts]
        if not stamps:
            return MovementSeries(street_id=street_id, points=())
        start = floor_hour(min(stamps))
        end = floor_hour(max(stamps)) + HOUR
        return build_street_series(
            street_id, self.posts, self.radar, self.pedestrians, start, end
        )

    def blocks(
        self,
        street_id: str,
        basis: BlockBasis = BlockBasis.OBSERVED,
        on_date: Optional[str] = None,
    ) -> list[ActivityBlock]:
        if basis is BlockBasis.OBSERVED:
            found = find_zero_blocks(self.observed_series(street_id), self.config)
        else:
            found = find_zero_blocks(self.forecast(street_id), self.config)
        if on_date is not None:
            found = [
                b
                for b in found
                if b.start.astimezone(self.config.tz).date().isoformat() == on_date
            ]
        return found

    def recommendations(
        self,
        street_id: str,
        basis: BlockBasis = BlockBasis.FORECAST,
        dim_level: Optional[float] = None,
        on_date: Optional[str] = None,
    ):
        blocks = self.blocks(street_id, basis=basis, on_date=on_date)
        posts = [p for p in self.posts.values() if p.street_id == street_id]
        posts.sort(key=lambda p: p.post_id)
        return recommend(blocks, posts, self.config, dim_level=dim_level)

    # -- maintenance ----------------------------------------------------------

    def issues(
        self,
        status: Optional[IssueStatus] = None,
        issue_class: Optional[IssueClass] = None,
        min_urgency: Optional[Urgency] = None,
    ) -> list[MaintenanceIssue]:
        return self.registry.list_issues(status, issue_class, min_urgency)

    def transition_issue(self, issue_id: str, action: str) -> MaintenanceIssue:
        issue = self.registry.get(issue_id)
        maintenance.target_status(issue, action)   # validate before logging
        self._append("transition", [{"issue_id": issue_id, "action": action}])
        return self.registry.transition(issue_id, action)

    # -- export ---------------------------------------------------------------

    def export_state(self) -> str:
        """Canonical snapshot of all derived state. Deliberately excludes
        wall-clock receive times so identical logs export identical bytes."""
        state = {
            "config": self.config.to_json_dict(),
            "posts": [self.posts[pid].to_dict() for pid in sorted(self.posts)],
            "rules": [rule_to_dict(r) for r in self.list_rules()],
            "violations": [violation_to_dict(v) for v in self.violations()],
            "models": {sid: model_to_dict(m) for sid, m in self.models.items()},
            "train_range": None
            if self.train_range is None
            else [format_instant(self.train_range[0]), format_instant(self.train_range[1])],
            "issues": [i.to_dict() for i in self.registry.issues],
            "event_counts": {
                "radar": len(self.radar),
                "pedestrian": len(self.pedestrians),
                "detections_accepted": maintenance.total_detections(self.registry.issues),
            },
        }
        return canonical_json(state)


def _rule_number(rule_id: str) -> Optional[int]:
    if rule_id.startswith("R-"):
        try:
            return int(rule_id[2:])
        except ValueError:
            return None
    return None


def load_posts_file(path: Path) -> list[SmartPost]:
    """posts.jsonl: one post object per line."""
    posts = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            posts.append(SmartPost.from_dict(json.loads(line)))
        except (json.JSONDecodeError, ValidationError, TypeError, ValueError) as exc:
            raise ValidationError(f"{path}:{lineno}: bad post record: {exc}")
    return posts
