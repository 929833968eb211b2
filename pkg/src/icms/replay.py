"""Dataset replay: feed recorded JSONL through the engines and report.

The pipeline is the month-1-train / month-2-holdout protocol: ingest all
feeds, fit forecast models on everything strictly before the boundary,
score them on the rest, then compute violations, zero blocks, savings, and
issue totals over the full range. The report serializes canonically so a
repeated run over identical inputs is byte-identical; wall-clock duration
is carried separately and never enters the canonical bytes.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Optional, Sequence, TypeVar

from .config import Config
from .core import IssueClass, Severity, SmartPost, Urgency, format_instant, parse_instant
from .datagen import dataset_hash
from .energy import BlockBasis, evaluate, preprocess_series
from .energy.series import build_street_series
from .errors import (
    DataError,
    InsufficientDataError,
    RecordParseError,
    RuleSyntaxError,
    ValidationError,
)
from .ingest import parse_feed
from .maintenance import total_detections
from .service import Engine, canonical_json, violation_to_dict

_FEED_FILES = (
    ("radar", "radar.jsonl"),
    ("pedestrian", "pedestrians.jsonl"),
    ("detection", "detections.jsonl"),
)

_E = TypeVar("_E")


def split_train_holdout(
    events: Sequence[_E],
    boundary: datetime,
    valid_range: Optional[tuple[datetime, datetime]] = None,
) -> tuple[list[_E], list[_E]]:
    """Partition events on timestamp: strictly-before vs at-or-after.

    Order is preserved in both parts and their union is the input. When the
    dataset declares a range, a boundary outside it is rejected; the edges
    themselves are legal and simply make one part empty.
    """
    if valid_range is not None:
        lo, hi = valid_range
        if not lo <= boundary <= hi:
            raise ValidationError(
                f"boundary {format_instant(boundary)} outside dataset range "
                f"[{format_instant(lo)}, {format_instant(hi)}]"
            )
    train = [e for e in events if e.timestamp < boundary]
    holdout = [e for e in events if e.timestamp >= boundary]
    return train, holdout


@dataclass(frozen=True)
class LoadedDataset:
    directory: Path
    manifest: dict
    posts: list[SmartPost]
    rules: list[dict]
    feeds: dict[str, list[dict]]   # kind -> decoded objects, file order

    @property
    def start(self) -> datetime:
        return parse_instant(self.manifest["start"], "manifest.start")

    @property
    def boundary(self) -> datetime:
        return parse_instant(self.manifest["boundary"], "manifest.boundary")

    @property
    def end(self) -> datetime:
        return parse_instant(self.manifest["end"], "manifest.end")


def load_dataset(dataset_dir: Path) -> LoadedDataset:
    """Strictly parse every dataset file; any bad record is a hard error
    naming the file and line."""
    directory = Path(dataset_dir)
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise DataError(f"{manifest_path}: dataset manifest not found")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{manifest_path}:{exc.lineno}: malformed JSON: {exc.msg}")
    for key in ("dataset_id", "start", "boundary", "end"):
        if key not in manifest:
            raise DataError(f"{manifest_path}: manifest missing field {key!r}")

    posts_path = directory / "posts.jsonl"
    posts: list[SmartPost] = []
    if posts_path.exists():
        from .service import load_posts_file

        try:
            posts = load_posts_file(posts_path)
        except ValidationError as exc:
            raise DataError(str(exc))

    rules_path = directory / "rules.json"
    rules: list[dict] = []
    if rules_path.exists():
        try:
            decoded = json.loads(rules_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DataError(f"{rules_path}:{exc.lineno}: malformed JSON: {exc.msg}")
        if not isinstance(decoded, list):
            raise DataError(f"{rules_path}: expected a JSON array of rules")
        rules = decoded

    feeds: dict[str, list[dict]] = {}
    for kind, filename in _FEED_FILES:
        path = directory / filename
        if not path.exists():
            feeds[kind] = []
            continue
        text = path.read_text(encoding="utf-8")
        try:
            parse_feed(kind, text)   # validation pass; errors carry "line N:"
        except (RecordParseError, ValidationError) as exc:
            raise DataError(f"{path}: {exc.args[0]}")
        feeds[kind] = [
            json.loads(line) for line in text.splitlines() if line.strip()
        ]
    return LoadedDataset(directory=directory, manifest=manifest, posts=posts, rules=rules, feeds=feeds)


@dataclass(frozen=True)
class ReplayReport:
    body: dict                 # everything canonical and deterministic
    duration_seconds: float    # wall clock, deliberately outside `body`

    def canonical(self) -> str:
        return canonical_json(self.body)


@dataclass(frozen=True)
class ReplayOutcome:
    report: ReplayReport
    engine: Engine
    dataset: LoadedDataset


def run_replay(
    dataset_dir: Path,
    config: Optional[Config] = None,
    boundary: Optional[datetime] = None,
) -> ReplayOutcome:
    started = time.perf_counter()
    config = config if config is not None else Config()
    dataset = load_dataset(dataset_dir)
    chosen_boundary = boundary if boundary is not None else dataset.boundary
    if not dataset.start <= chosen_boundary <= dataset.end:
        raise DataError(
            f"boundary {format_instant(chosen_boundary)} outside dataset range "
            f"[{manifest_range(dataset)}]"
        )

    engine = Engine(config, dataset.posts)
    for index, raw in enumerate(dataset.rules):
        if not isinstance(raw, dict) or "text" not in raw:
            raise DataError(f"rules.json: rule #{index + 1} must be an object with 'text'")
        try:
            engine.create_rule(
                name=str(raw.get("name", f"rule {index + 1}")),
                text=str(raw["text"]),
                enabled=bool(raw.get("enabled", True)),
            )
        except RuleSyntaxError as exc:
            raise DataError(f"rules.json: rule #{index + 1}: {exc}")

    for kind, _ in _FEED_FILES:
        outcome = engine.ingest(kind, dataset.feeds[kind])
        if outcome["quarantined"]:
            raise DataError(
                f"dataset {kind} feed references posts missing from posts.jsonl "
                f"({outcome['quarantined']} events)"
            )

    engine.train(dataset.start, chosen_boundary)

    forecast_metrics: dict[str, dict] = {}
    for street_id in engine.streets():
        model = engine.models.get(street_id)
        if model is None:
            forecast_metrics[street_id] = {"skipped": "no trained model"}
            continue
        holdout_raw = build_street_series(
            street_id, engine.posts, engine.radar, engine.pedestrians,
            chosen_boundary, dataset.end,
        )
        try:
            holdout = preprocess_series(holdout_raw, config)
            scores = evaluate(model, holdout, config)
        except InsufficientDataError as exc:
            forecast_metrics[street_id] = {"skipped": str(exc)}
            continue
        forecast_metrics[street_id] = {
            "mae": scores.mae,
            "mape": scores.mape,
            "n": scores.n,
            "trained_from": format_instant(model.trained_from),
            "trained_to": format_instant(model.trained_to),
        }

    violations = engine.violations()
    by_severity = {s.value: 0 for s in Severity}
    for v in violations:
        by_severity[v.severity.value] += 1

    blocks_by_street: dict[str, int] = {}
    total_blocks = 0
    total_block_hours = 0
    total_savings = 0.0
    for street_id in engine.streets():
        found = engine.blocks(street_id, BlockBasis.OBSERVED)
        blocks_by_street[street_id] = len(found)
        total_blocks += len(found)
        total_block_hours += sum(b.length_hours for b in found)
        for rec in engine.recommendations(street_id, basis=BlockBasis.OBSERVED):
            total_savings += rec.estimated_savings_kwh

    issues = engine.registry.issues
    by_class = {c.value: 0 for c in IssueClass}
    by_urgency = {u.value: 0 for u in Urgency}
    for issue in issues:
        by_class[issue.issue_class.value] += 1
        by_urgency[issue.urgency.value] += 1

    body = {
        "dataset": {
            "id": dataset.manifest["dataset_id"],
            "hash": dataset_hash(dataset.directory),
            "start": format_instant(dataset.start),
            "boundary": format_instant(chosen_boundary),
            "end": format_instant(dataset.end),
        },
        "forecast": forecast_metrics,
        "violations": {"total": len(violations), "by_severity": by_severity},
        "blocks": {
            "total": total_blocks,
            "total_hours": total_block_hours,
            "by_street": blocks_by_street,
            "estimated_savings_kwh": total_savings,
        },
        "issues": {
            "total": len(issues),
            "by_class": by_class,
            "by_urgency": by_urgency,
            "detections_accepted": total_detections(issues),
        },
    }
    report = ReplayReport(body=body, duration_seconds=time.perf_counter() - started)
    return ReplayOutcome(report=report, engine=engine, dataset=dataset)


def manifest_range(dataset: LoadedDataset) -> str:
    return f"{dataset.manifest['start']}, {dataset.manifest['end']}"


def build_artifacts(outcome: ReplayOutcome) -> dict[str, str]:
    """Figure-analogue JSON documents keyed by filename, all canonical: the
    ratio chart data, block lists, forecasts, recommendations, violations,
    and the issue map."""
    engine = outcome.engine
    dataset = outcome.dataset
    from .service import forecast_to_dict

    ratio = {}
    blocks = {}
    forecasts = {}
    recommendations = {}
    for street_id in engine.streets():
        ratio[street_id] = _ratio_dict(engine, street_id, dataset)
        blocks[street_id] = [b.to_dict() for b in engine.blocks(street_id, BlockBasis.OBSERVED)]
        model = engine.models.get(street_id)
        forecasts[street_id] = None if model is None else forecast_to_dict(engine.forecast(street_id))
        recommendations[street_id] = [
            r.to_dict() for r in engine.recommendations(street_id, basis=BlockBasis.OBSERVED)
        ]

    violations = engine.violations()
    return {
        "report.json": outcome.report.canonical(),
        "ratio.json": canonical_json(ratio),
        "blocks.json": canonical_json(blocks),
        "forecasts.json": canonical_json(forecasts),
        "recommendations.json": canonical_json(recommendations),
        "violations.json": canonical_json(
            {"violations": [violation_to_dict(v) for v in violations]}
        ),
        "issues.json": canonical_json({"issues": [i.to_dict() for i in engine.issues()]}),
        "issues.geojson": canonical_json(engine.registry.geojson()),
        "posts.json": canonical_json(
            {"posts": [engine.posts[pid].to_dict() for pid in sorted(engine.posts)]}
        ),
    }


def _ratio_dict(engine: Engine, street_id: str, dataset: LoadedDataset) -> dict:
    ratio = engine.ratio(street_id, dataset.start, dataset.end)
    return {
        "street_id": ratio.street_id,
        "speeding": list(ratio.speeding),
        "pedestrians": list(ratio.pedestrians),
        "ratios": list(ratio.ratios),
        "exceeded": list(ratio.exceeded),
        "threshold": ratio.threshold,
    }
