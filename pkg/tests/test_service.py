"""Engine-level behavior: batch ingestion, rule lifecycle, derived safety
views, training and forecasting, persistence, and canonical export."""

from __future__ import annotations

import json
from datetime import timedelta

import pytest

from icms.core import IssueStatus, Urgency, format_instant
from icms.energy.lighting import BlockBasis
from icms.errors import (
    NotFoundError,
    RuleSyntaxError,
    StateError,
    ValidationError,
)
from icms.service import Engine, load_posts_file

from .conftest import detection_obj, ped_obj, radar_obj, utc


@pytest.fixture
def engine(config, posts):
    return Engine(config, posts)


def log_engine(config, posts, tmp_path):
    eng = Engine(config, posts, log_path=tmp_path / "events.jsonl")
    eng.start()
    return eng


# -- ingestion ----------------------------------------------------------------


def test_ingest_counts_accepted_and_quarantined(engine):
    ts = utc(2023, 1, 10, 12, 1)
    batch = [
        radar_obj("AV-01-P1", ts, 42.0),
        radar_obj("AV-01-P2", ts, 55.0),
        radar_obj("ZZ-99-P9", ts, 50.0),            # unknown post
        {"post_id": "AV-01-P1", "ts": format_instant(ts)},   # missing fields
        "not an object",
    ]
    result = engine.ingest("radar", batch)
    assert result == {"accepted": 2, "quarantined": 3}
    assert len(engine.radar) == 2


def test_ingest_pedestrian_and_detection_kinds(engine):
    ts = utc(2023, 1, 10, 12, 0)
    assert engine.ingest("pedestrian", [ped_obj("AV-01-P1", ts, 4)])["accepted"] == 1
    result = engine.ingest("detection", [detection_obj(40.64, -8.65, 0.9, ts)])
    assert result == {"accepted": 1, "quarantined": 0}
    assert len(engine.issues()) == 1


def test_ingest_unknown_kind_rejected(engine):
    with pytest.raises(ValidationError):
        engine.ingest("weather", [{}])


def test_ingest_empty_batch(engine):
    assert engine.ingest("radar", []) == {"accepted": 0, "quarantined": 0}


def test_quarantined_records_are_not_persisted(config, posts, tmp_path):
    eng = log_engine(config, posts, tmp_path)
    ts = utc(2023, 1, 10, 12, 0)
    eng.ingest("radar", [radar_obj("AV-01-P1", ts, 40.0), radar_obj("NOPE", ts, 40.0)])
    eng.close()
    lines = (tmp_path / "events.jsonl").read_text().splitlines()
    assert len(lines) == 1
    assert json.loads(lines[0])["payload"]["post_id"] == "AV-01-P1"


# -- rule lifecycle -------------------------------------------------------------


def test_rule_ids_are_sequential_and_never_reused(engine):
    r1 = engine.create_rule("a", "avg_speed > 50 -> warning")
    r2 = engine.create_rule("b", "avg_speed > 90 -> danger")
    assert (r1.rule_id, r2.rule_id) == ("R-0001", "R-0002")
    engine.delete_rule("R-0002")
    r3 = engine.create_rule("c", "vehicle_count > 3 -> warning")
    assert r3.rule_id == "R-0003"


def test_create_rule_syntax_error_leaves_no_trace(config, posts, tmp_path):
    eng = log_engine(config, posts, tmp_path)
    with pytest.raises(RuleSyntaxError):
        eng.create_rule("bad", "avg_speed >> 50 -> warning")
    assert eng.list_rules() == []
    assert eng.last_seq == 0
    eng.close()


def test_update_rule_replaces_fields(engine):
    engine.create_rule("orig", "avg_speed > 50 -> warning")
    updated = engine.update_rule("R-0001", "renamed", "avg_speed > 60 -> danger", False)
    assert updated.name == "renamed"
    assert updated.text == "avg_speed > 60 -> danger"
    assert updated.enabled is False
    assert engine.get_rule("R-0001").text == "avg_speed > 60 -> danger"


def test_update_keeps_rule_id_sequence_intact(engine):
    engine.create_rule("a", "avg_speed > 50 -> warning")
    engine.update_rule("R-0001", "a", "avg_speed > 55 -> warning", True)
    assert engine.create_rule("b", "vehicle_count > 1 -> warning").rule_id == "R-0002"


@pytest.mark.parametrize("action", ["update", "delete", "get"])
def test_rule_operations_on_unknown_id_raise(engine, action):
    with pytest.raises(NotFoundError):
        if action == "update":
            engine.update_rule("R-9999", "x", "avg_speed > 1 -> warning", True)
        elif action == "delete":
            engine.delete_rule("R-9999")
        else:
            engine.get_rule("R-9999")


def test_list_rules_sorted_by_id(engine):
    for text in ("avg_speed > 1 -> warning",) * 3:
        engine.create_rule("r", text)
    assert [r.rule_id for r in engine.list_rules()] == ["R-0001", "R-0002", "R-0003"]


# -- derived safety views --------------------------------------------------------


def test_violations_are_a_view_over_current_rules(engine):
    ts = utc(2023, 1, 10, 12, 1)
    engine.ingest("radar", [radar_obj("AV-01-P1", ts, 70.0)])
    assert engine.violations() == []
    engine.create_rule("fast", "avg_speed > 60 -> warning")
    found = engine.violations()
    assert len(found) == 1
    assert found[0].post_id == "AV-01-P1"
    assert found[0].window_start == utc(2023, 1, 10, 12, 0)
    engine.delete_rule("R-0001")
    assert engine.violations() == []


def test_violations_reevaluate_after_rule_edit(engine):
    engine.ingest("radar", [radar_obj("AV-01-P1", utc(2023, 1, 10, 12, 1), 70.0)])
    engine.create_rule("fast", "avg_speed > 60 -> warning")
    assert len(engine.violations()) == 1
    engine.update_rule("R-0001", "fast", "avg_speed > 80 -> warning", True)
    assert engine.violations() == []


def test_violations_filters(engine):
    engine.ingest(
        "radar",
        [
            radar_obj("AV-01-P1", utc(2023, 1, 10, 12, 1), 70.0),
            radar_obj("AV-01-P2", utc(2023, 1, 10, 13, 1), 70.0),
        ],
    )
    engine.create_rule("fast", "avg_speed > 60 -> warning")
    assert len(engine.violations()) == 2
    assert [v.post_id for v in engine.violations(post_id="AV-01-P2")] == ["AV-01-P2"]
    only_first = engine.violations(
        from_ts=utc(2023, 1, 10, 12, 0), to_ts=utc(2023, 1, 10, 13, 0)
    )
    assert [v.post_id for v in only_first] == ["AV-01-P1"]


def test_window_features_refresh_after_ingest(engine):
    engine.ingest("radar", [radar_obj("AV-01-P1", utc(2023, 1, 10, 12, 1), 40.0)])
    assert len(engine.window_features()) == 1
    engine.ingest("radar", [radar_obj("AV-01-P1", utc(2023, 1, 10, 14, 1), 40.0)])
    assert len(engine.window_features()) == 2


def test_ratio_delegates_with_street_posts(engine):
    start = utc(2023, 1, 10, 0, 0)
    engine.ingest("radar", [radar_obj("AV-01-P1", utc(2023, 1, 10, 12, 1), 70.0)])
    engine.create_rule("fast", "avg_speed > 60 -> warning")
    ratio = engine.ratio("AV-01", start, start + timedelta(days=1))
    assert len(ratio.ratios) == 24
    assert ratio.speeding[12] == 1


# -- training and forecasting ----------------------------------------------------


def hourly_radar(post_id, start, hours, speed=30.0):
    return [radar_obj(post_id, start + timedelta(hours=h), speed) for h in range(hours)]


def test_train_fits_one_model_per_street(engine):
    start = utc(2023, 1, 2, 0, 0)
    engine.ingest("radar", hourly_radar("AV-01-P1", start, 48))
    engine.ingest("radar", hourly_radar("RN-02-P1", start, 48))
    result = engine.train(start, start + timedelta(hours=48))
    assert sorted(engine.models) == ["AV-01", "RN-02"]
    assert result["skipped"] == []
    assert result["from"] == "2023-01-02T00:00:00Z"
    assert {m["street_id"] for m in result["models"]} == {"AV-01", "RN-02"}
    assert engine.train_range == (start, start + timedelta(hours=48))


def test_train_skips_streets_with_too_little_data(engine):
    start = utc(2023, 1, 2, 0, 0)
    engine.ingest("radar", hourly_radar("AV-01-P1", start, 2))
    result = engine.train(start, start + timedelta(hours=2))
    assert engine.models == {}
    assert {s["street_id"] for s in result["skipped"]} == {"AV-01", "RN-02"}


def test_train_rejects_empty_range(engine):
    with pytest.raises(ValidationError):
        engine.train(utc(2023, 1, 2), utc(2023, 1, 2))


def test_forecast_starts_the_hour_after_the_training_window(engine):
    start = utc(2023, 1, 2, 0, 0)
    engine.ingest("radar", hourly_radar("AV-01-P1", start, 48, speed=30.0))
    engine.train(start, start + timedelta(hours=48))
    fc = engine.forecast("AV-01")
    # last trained grid hour is 47h after start, so the forecast begins at 48h
    assert fc.points[0][0] == start + timedelta(hours=48)
    assert len(fc.points) == 24


def test_forecast_is_pure(engine):
    start = utc(2023, 1, 2, 0, 0)
    engine.ingest("radar", hourly_radar("AV-01-P1", start, 48))
    engine.train(start, start + timedelta(hours=48))
    assert engine.forecast("AV-01") == engine.forecast("AV-01")


def test_forecast_without_model_raises(engine):
    with pytest.raises(NotFoundError):
        engine.forecast("AV-01")


def test_forecast_unknown_street_raises(engine):
    with pytest.raises(NotFoundError):
        engine.forecast("XX-77")


def test_observed_series_covers_full_event_range_with_zeros(engine):
    first = utc(2023, 1, 10, 8, 30)
    last = utc(2023, 1, 10, 11, 15)
    engine.ingest("radar", [radar_obj("AV-01-P1", first, 40.0)])
    engine.ingest("pedestrian", [ped_obj("AV-01-P2", last, 2)])
    series = engine.observed_series("AV-01")
    assert series.points[0][0] == utc(2023, 1, 10, 8, 0)
    assert series.points[-1][0] == utc(2023, 1, 10, 11, 0)
    assert [v for _, v in series.points] == [1.0, 0.0, 0.0, 2.0]


def test_observed_series_empty_street(engine):
    assert engine.observed_series("RN-02").points == ()


# -- blocks and recommendations ---------------------------------------------------


def seed_two_quiet_nights(engine):
    """Daytime traffic on Jan 10-12; both nights fully silent."""
    start = utc(2023, 1, 10, 0, 0)
    batch = []
    for h in range(60):       # Jan 10 00:00 .. Jan 12 11:00
        ts = start + timedelta(hours=h)
        if 8 <= ts.hour < 20:
            batch.append(radar_obj("AV-01-P1", ts + timedelta(minutes=1), 30.0))
    engine.ingest("radar", batch)
    return start


def test_blocks_default_to_observed_basis(engine):
    seed_two_quiet_nights(engine)
    blocks = engine.blocks("AV-01")
    assert all(b.basis is BlockBasis.OBSERVED for b in blocks)
    starts = [b.start for b in blocks]
    assert utc(2023, 1, 10, 22, 0) in starts and utc(2023, 1, 11, 22, 0) in starts


def test_blocks_date_filter_uses_local_start_date(engine):
    seed_two_quiet_nights(engine)
    on_day = engine.blocks("AV-01", on_date="2023-01-11")
    assert [b.start for b in on_day] == [utc(2023, 1, 11, 22, 0)]
    assert engine.blocks("AV-01", on_date="2024-06-01") == []


def test_recommendations_default_to_forecast_basis(engine):
    start = seed_two_quiet_nights(engine)
    engine.train(start, start + timedelta(hours=60))
    recs = engine.recommendations("AV-01")
    assert recs, "quiet trained nights should forecast as dimmable blocks"
    assert all(r.block.basis is BlockBasis.FORECAST for r in recs)
    observed = engine.recommendations("AV-01", basis=BlockBasis.OBSERVED)
    assert all(r.block.basis is BlockBasis.OBSERVED for r in observed)


def test_recommendations_honour_dim_level_override(engine):
    seed_two_quiet_nights(engine)
    base = engine.recommendations("AV-01", basis=BlockBasis.OBSERVED)
    deeper = engine.recommendations("AV-01", basis=BlockBasis.OBSERVED, dim_level=0.1)
    assert deeper[0].estimated_savings_kwh > base[0].estimated_savings_kwh


# -- maintenance pass-through ------------------------------------------------------


def test_issue_listing_and_transitions(engine):
    ts = utc(2023, 1, 10, 12, 0)
    engine.ingest("detection", [detection_obj(40.64, -8.65, 0.95, ts)])
    issue = engine.issues()[0]
    assert issue.urgency is Urgency.URGENT
    moved = engine.transition_issue(issue.issue_id, "acknowledge")
    assert moved.status is IssueStatus.ACKNOWLEDGED
    assert engine.issues(status=IssueStatus.ACKNOWLEDGED)[0].issue_id == issue.issue_id


def test_failed_transition_not_logged(config, posts, tmp_path):
    eng = log_engine(config, posts, tmp_path)
    eng.ingest("detection", [detection_obj(40.64, -8.65, 0.9, utc(2023, 1, 10))])
    issue_id = eng.issues()[0].issue_id
    eng.transition_issue(issue_id, "resolve")
    seq_before = eng.last_seq
    with pytest.raises(StateError):
        eng.transition_issue(issue_id, "acknowledge")
    assert eng.last_seq == seq_before
    eng.close()


def test_unknown_issue_transition(engine):
    with pytest.raises(NotFoundError):
        engine.transition_issue("MI-9999", "resolve")


# -- persistence and export ---------------------------------------------------------


def populate(eng):
    start = utc(2023, 1, 2, 0, 0)
    eng.ingest("radar", hourly_radar("AV-01-P1", start, 30, speed=61.0))
    eng.ingest("pedestrian", [ped_obj("AV-01-P2", start + timedelta(hours=2), 7)])
    eng.ingest(
        "detection",
        [
            detection_obj(40.64, -8.65, 0.55, start, image="frames/a.jpg"),
            detection_obj(40.64, -8.65, 0.75, start + timedelta(hours=1)),
        ],
    )
    eng.create_rule("fast", "avg_speed > 50 -> warning")
    eng.train(start, start + timedelta(hours=30))
    eng.transition_issue(eng.issues()[0].issue_id, "acknowledge")


def test_restart_replays_into_identical_export(config, posts, tmp_path):
    eng = log_engine(config, posts, tmp_path)
    populate(eng)
    before = eng.export_state()
    seq = eng.last_seq
    eng.close()

    fresh = Engine(config, posts, log_path=tmp_path / "events.jsonl")
    applied = fresh.start()
    assert applied == seq
    assert fresh.export_state() == before
    fresh.close()


def test_export_excludes_wall_clock_and_is_stable(engine):
    populate(engine)
    snap = engine.export_state()
    assert snap == engine.export_state()
    assert "received_at" not in snap
    state = json.loads(snap)
    assert state["event_counts"] == {
        "radar": 30,
        "pedestrian": 1,
        "detections_accepted": 2,
    }
    assert state["train_range"] == ["2023-01-02T00:00:00Z", "2023-01-03T06:00:00Z"]
    assert len(state["violations"]) == 30


def test_memory_engine_start_is_a_noop(engine):
    assert engine.start() == 0
    assert engine.last_seq == 0


def test_last_seq_counts_appended_records(config, posts, tmp_path):
    eng = log_engine(config, posts, tmp_path)
    ts = utc(2023, 1, 10, 12, 0)
    eng.ingest("radar", [radar_obj("AV-01-P1", ts, 40.0), radar_obj("AV-01-P2", ts, 41.0)])
    eng.create_rule("r", "avg_speed > 1 -> warning")
    assert eng.last_seq == 3
    eng.close()


# -- posts file ----------------------------------------------------------------------


def test_load_posts_file_round_trip(tmp_path, posts):
    path = tmp_path / "posts.jsonl"
    path.write_text("".join(json.dumps(p.to_dict()) + "\n" for p in posts))
    loaded = load_posts_file(path)
    assert loaded == posts


def test_load_posts_file_reports_bad_line(tmp_path):
    path = tmp_path / "posts.jsonl"
    path.write_text('{"post_id": "P1"}\n')
    with pytest.raises(ValidationError, match="posts.jsonl:1"):
        load_posts_file(path)
