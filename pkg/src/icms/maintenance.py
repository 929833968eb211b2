"""Maintenance issue registry.

Confidence-scored detections are deduplicated into located issues: a new
sighting merges into the nearest unresolved issue of the same class within
the dedup radius, otherwise it opens a new issue. An issue keeps the location
of its first detection, so the no-two-nearby invariant holds by construction
under serial ingestion.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from datetime import datetime
from typing import Iterable, Optional

from .config import Config
from .core import (
    DetectionEvent,
    IssueClass,
    IssueStatus,
    Urgency,
    format_instant,
    haversine_m,
)
from .errors import NotFoundError, StateError, ValidationError


def urgency_band(confidence: float, cuts: tuple[float, float]) -> Urgency:
    """routine below the first cut, urgent from the second; cuts inclusive
    on the higher band, so 0.5 with default cuts is elevated."""
    cut1, cut2 = cuts
    if confidence < cut1:
        return Urgency.ROUTINE
    if confidence < cut2:
        return Urgency.ELEVATED
    return Urgency.URGENT


@dataclass(frozen=True)
class MaintenanceIssue:
    issue_id: str
    issue_class: IssueClass
    latitude: float    # pinned to the first detection; merges never move it
    longitude: float
    max_confidence: float
    detection_count: int
    first_seen: datetime
    last_seen: datetime
    status: IssueStatus
    urgency: Urgency
    image_refs: tuple[str, ...] = ()

    @property
    def location(self) -> tuple[float, float]:
        return (self.latitude, self.longitude)

    def to_dict(self) -> dict:
        return {
            "issue_id": self.issue_id,
            "class": self.issue_class.value,
            "lat": self.latitude,
            "lon": self.longitude,
            "max_confidence": self.max_confidence,
            "detection_count": self.detection_count,
            "first_seen": format_instant(self.first_seen),
            "last_seen": format_instant(self.last_seen),
            "status": self.status.value,
            "urgency": self.urgency.value,
            "image_refs": list(self.image_refs),
        }


_TRANSITIONS = {
    "acknowledge": IssueStatus.ACKNOWLEDGED,
    "resolve": IssueStatus.RESOLVED,
}
_ORDER = (IssueStatus.OPEN, IssueStatus.ACKNOWLEDGED, IssueStatus.RESOLVED)


def target_status(issue: MaintenanceIssue, action: str) -> IssueStatus:
    """The status `action` moves `issue` to; raises if the move is illegal.

    The lifecycle only advances: open -> acknowledged -> resolved, skipping
    allowed, never backwards, resolved terminal.
    """
    try:
        new_status = _TRANSITIONS[action]
    except KeyError:
        raise ValidationError(f"unknown transition action {action!r}")
    if _ORDER.index(new_status) <= _ORDER.index(issue.status):
        raise StateError(f"issue {issue.issue_id} is {issue.status.value}; cannot {action}")
    return new_status


class MaintenanceRegistry:
    """Single-writer issue store; every mutation returns the new snapshot."""

    def __init__(self, config: Config):
        self._config = config
        self._issues: dict[str, MaintenanceIssue] = {}
        self._order: dict[str, int] = {}   # creation order for the merge tie-break
        self._seq = 0

    def __len__(self) -> int:
        return len(self._issues)

    @property
    def issues(self) -> tuple[MaintenanceIssue, ...]:
        return tuple(self._issues.values())

    def get(self, issue_id: str) -> MaintenanceIssue:
        try:
            return self._issues[issue_id]
        except KeyError:
            raise NotFoundError(f"no issue with id {issue_id!r}")

    def ingest_detection(self, event: DetectionEvent) -> tuple[str, str]:
        """Returns (issue_id, "created" | "merged")."""
        target = self._merge_target(event)
        if target is None:
            self._seq += 1
            issue_id = f"ISS-{self._seq:06d}"
            issue = MaintenanceIssue(
                issue_id=issue_id,
                issue_class=event.detected_class,
                latitude=event.latitude,
                longitude=event.longitude,
                max_confidence=event.confidence,
                detection_count=1,
                first_seen=event.timestamp,
                last_seen=event.timestamp,
                status=IssueStatus.OPEN,
                urgency=urgency_band(event.confidence, self._config.urgency_cuts),
                image_refs=(event.image_ref,) if event.image_ref else (),
            )
            self._issues[issue_id] = issue
            self._order[issue_id] = self._seq
            return issue_id, "created"

        new_conf = max(target.max_confidence, event.confidence)
        merged = dataclasses.replace(
            target,
            max_confidence=new_conf,
            detection_count=target.detection_count + 1,
            first_seen=min(target.first_seen, event.timestamp),
            last_seen=max(target.last_seen, event.timestamp),
            urgency=urgency_band(new_conf, self._config.urgency_cuts),
            image_refs=target.image_refs + ((event.image_ref,) if event.image_ref else ()),
        )
        self._issues[merged.issue_id] = merged
        return merged.issue_id, "merged"

    def _merge_target(self, event: DetectionEvent) -> Optional[MaintenanceIssue]:
        best: Optional[tuple[float, datetime, int, MaintenanceIssue]] = None
        for issue in self._issues.values():
            if issue.issue_class is not event.detected_class:
                continue
            if issue.status is IssueStatus.RESOLVED:
                continue
            dist = haversine_m(issue.location, event.location)
            if dist > self._config.dedup_radius_m:
                continue
            key = (dist, issue.first_seen, self._order[issue.issue_id], issue)
            if best is None or key[:3] < best[:3]:
                best = key
        return best[3] if best else None

    def list_issues(
        self,
        status: Optional[IssueStatus] = None,
        issue_class: Optional[IssueClass] = None,
        min_urgency: Optional[Urgency] = None,
    ) -> list[MaintenanceIssue]:
        """Filtered view sorted most pressing first: urgency, then confidence,
        then recency; issue id breaks exact ties deterministically."""
        out = [
            i
            for i in self._issues.values()
            if (status is None or i.status is status)
            and (issue_class is None or i.issue_class is issue_class)
            and (min_urgency is None or i.urgency.rank >= min_urgency.rank)
        ]
        out.sort(
            key=lambda i: (-i.urgency.rank, -i.max_confidence, -i.last_seen.timestamp(), i.issue_id)
        )
        return out

    def transition(self, issue_id: str, action: str) -> MaintenanceIssue:
        issue = self.get(issue_id)
        updated = dataclasses.replace(issue, status=target_status(issue, action))
        self._issues[issue_id] = updated
        return updated

    def geojson(self) -> dict:
        features = []
        for issue in self._issues.values():
            features.append(
                {
                    "type": "Feature",
                    "geometry": {
                        "type": "Point",
                        "coordinates": [issue.longitude, issue.latitude],
                    },
                    "properties": {
                        "issue_id": issue.issue_id,
                        "class": issue.issue_class.value,
                        "urgency": issue.urgency.value,
                        "max_confidence": issue.max_confidence,
                        "status": issue.status.value,
                    },
                }
            )
        return {"type": "FeatureCollection", "features": features}

    def export_jsonl(self) -> str:
        """One issue per line in creation order; deterministic given one
        ingest history, which makes recovery byte-comparable."""
        lines = [
            json.dumps(self._issues[iid].to_dict(), sort_keys=True, separators=(",", ":"))
            for iid in sorted(self._issues, key=lambda i: self._order[i])
        ]
        return "\n".join(lines) + ("\n" if lines else "")


def total_detections(issues: Iterable[MaintenanceIssue]) -> int:
    return sum(i.detection_count for i in issues)
