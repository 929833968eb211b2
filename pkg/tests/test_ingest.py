"""Feed parsing, vehicle-class filtering, and per-post segregation."""

import json
from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st

from icms.core import ObjectClass, PedestrianCount, RadarReading, SmartPost
from icms.errors import RecordParseError, SchemaError, ValidationError
from icms.ingest import (
    filter_vehicle_classes,
    parse_feed,
    parse_record,
    segregate_by_post,
)

from .conftest import mk_ped, mk_radar, utc


class TestParseRecord:
    def test_radar_direct_mapping(self):
        line = '{"post_id":"p1","ts":"2023-03-01T10:00:00Z","class":"light_vehicle","speed_kmh":52.0}'
        ev = parse_record("radar", line)
        assert ev == RadarReading("p1", utc(2023, 3, 1, 10), ObjectClass.LIGHT_VEHICLE, 52.0)

    def test_radar_unrecognized_class_maps_to_other(self):
        line = '{"post_id":"p1","ts":"2023-03-01T10:00:00Z","class":"bicycle","speed_kmh":18.0}'
        assert parse_record("radar", line).object_class is ObjectClass.OTHER

    def test_pedestrian_negative_count_rejected(self):
        line = '{"post_id":"p1","ts":"2023-03-01T10:00:00Z","count":-3}'
        with pytest.raises(ValidationError, match=">= 0"):
            parse_record("pedestrian", line)

    def test_malformed_json_carries_byte_offset(self):
        with pytest.raises(RecordParseError) as exc:
            parse_record("radar", '{"post_id": }')
        assert exc.value.offset == 12

    def test_missing_field_names_it(self):
        with pytest.raises(SchemaError) as exc:
            parse_record("radar", '{"post_id":"p1","ts":"2023-03-01T10:00:00Z","class":"other"}')
        assert exc.value.field == "speed_kmh"

    def test_detection_parses(self):
        line = json.dumps(
            {
                "source_id": "cam-3",
                "ts": "2023-03-01T10:00:00Z",
                "class": "pothole",
                "confidence": 0.41,
                "lat": 40.64,
                "lon": -8.65,
                "image_ref": "frames/0001.jpg",
            }
        )
        ev = parse_record("detection", line)
        assert ev.confidence == 0.41
        assert ev.image_ref == "frames/0001.jpg"

    def test_detection_unknown_class_rejected(self):
        line = '{"source_id":"c","ts":"2023-03-01T10:00:00Z","class":"ufo","confidence":0.5,"lat":0,"lon":0}'
        with pytest.raises(ValidationError, match="ufo"):
            parse_record("detection", line)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValidationError, match="kind"):
            parse_record("telemetry", "{}")

    def test_accepts_predecoded_object(self):
        obj = {"post_id": "p1", "ts": "2023-03-01T10:00:00Z", "count": 4}
        assert parse_record("pedestrian", obj).count == 4

    def test_non_object_record_rejected(self):
        with pytest.raises(RecordParseError, match="object"):
            parse_record("radar", "[1, 2]")

    @given(st.text(max_size=60))
    def test_fuzz_never_returns_invalid_value(self, blob):
        # Random bytes either raise a typed error or produce a valid event.
        try:
            ev = parse_record("radar", blob)
        except (RecordParseError, ValidationError):
            return
        assert ev.speed_kmh >= 0
        assert ev.object_class in ObjectClass

    def test_parse_feed_line_numbers(self):
        text = '{"post_id":"p1","ts":"2023-03-01T10:00:00Z","count":1}\n\n{"post_id":"p1","count":-2,"ts":"2023-03-01T10:01:00Z"}\n'
        with pytest.raises(ValidationError, match="line 3"):
            parse_feed("pedestrian", text)

    def test_parse_feed_skips_blank_lines(self):
        text = '\n{"post_id":"p1","ts":"2023-03-01T10:00:00Z","count":1}\n\n'
        assert len(parse_feed("pedestrian", text)) == 1


class TestFilterVehicleClasses:
    def test_empty(self):
        assert filter_vehicle_classes([]) == []

    def test_keeps_two_classes_in_order(self):
        light = mk_radar("p1", utc(2023, 3, 1, 10), 30, ObjectClass.LIGHT_VEHICLE)
        other = mk_radar("p1", utc(2023, 3, 1, 10, 1), 12, ObjectClass.OTHER)
        heavy = mk_radar("p1", utc(2023, 3, 1, 10, 2), 40, ObjectClass.HEAVY_VEHICLE)
        assert filter_vehicle_classes([light, other, heavy]) == [light, heavy]

    readings = st.lists(
        st.builds(
            mk_radar,
            st.sampled_from(["p1", "p2", "p3"]),
            st.datetimes(
                min_value=utc(2023, 1, 1).replace(tzinfo=None),
                max_value=utc(2023, 12, 31).replace(tzinfo=None),
                timezones=st.just(utc(2023, 1, 1).tzinfo),
            ),
            st.floats(min_value=0, max_value=200),
            st.sampled_from(list(ObjectClass)),
        ),
        max_size=200,
    )

    @given(readings)
    def test_matches_linear_scan_oracle(self, rs):
        keep = {ObjectClass.LIGHT_VEHICLE, ObjectClass.HEAVY_VEHICLE}
        assert filter_vehicle_classes(rs) == [r for r in rs if r.object_class in keep]

    @given(readings)
    def test_idempotent(self, rs):
        once = filter_vehicle_classes(rs)
        assert filter_vehicle_classes(once) == once


class TestSegregation:
    def _registry(self, ids):
        return {
            pid: SmartPost(pid, "ST", 40.0, -8.0, 50, 1, 80.0, True) for pid in ids
        }

    def test_empty(self):
        batch = segregate_by_post([], self._registry(["p1"]))
        assert batch.streams == {}
        assert batch.dead_letter == ()

    def test_partition_multiset_equal(self):
        events = [
            mk_radar("p1", utc(2023, 3, 1, 10, 5), 30),
            mk_ped("p2", utc(2023, 3, 1, 10, 1), 2),
            mk_radar("p1", utc(2023, 3, 1, 10, 0), 40),
        ]
        batch = segregate_by_post(events, self._registry(["p1", "p2"]))
        flattened = [e for stream in batch.streams.values() for e in stream]
        assert Counter(map(id, flattened)) == Counter(map(id, events))
        assert [e.timestamp.minute for e in batch.streams["p1"]] == [0, 5]

    def test_unknown_post_quarantined_not_dropped(self):
        events = [mk_ped("ghost", utc(2023, 3, 1, 10), 1)]
        batch = segregate_by_post(events, self._registry(["p1"]))
        assert batch.streams == {}
        assert batch.dead_letter == tuple(events)

    def test_stable_for_timestamp_ties(self):
        a = mk_radar("p1", utc(2023, 3, 1, 10), 10)
        b = mk_radar("p1", utc(2023, 3, 1, 10), 20)
        batch = segregate_by_post([a, b], self._registry(["p1"]))
        assert batch.streams["p1"] == (a, b)

    events = st.lists(
        st.builds(
            mk_ped,
            st.sampled_from([f"p{i}" for i in range(20)] + ["ghost-a", "ghost-b"]),
            st.datetimes(
                min_value=utc(2023, 1, 1).replace(tzinfo=None),
                max_value=utc(2023, 1, 7).replace(tzinfo=None),
                timezones=st.just(utc(2023, 1, 1).tzinfo),
            ),
            st.integers(min_value=0, max_value=50),
        ),
        max_size=300,
    )

    @given(events)
    def test_matches_group_sort_oracle_and_conserves(self, evs):
        registry = self._registry([f"p{i}" for i in range(20)])
        batch = segregate_by_post(evs, registry)

        expected: dict[str, list] = {}
        dead = []
        for e in evs:
            (expected.setdefault(e.post_id, []) if e.post_id in registry else dead).append(e)
        for stream in expected.values():
            stream.sort(key=lambda e: e.timestamp)

        assert {k: list(v) for k, v in batch.streams.items()} == expected
        assert list(batch.dead_letter) == dead
        assert batch.total_events() == len(evs)
