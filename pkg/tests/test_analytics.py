"""Rule evaluation over windows, frequency banding, and the hourly street ratio."""

import random
from datetime import timedelta
from zoneinfo import ZoneInfo

import pytest
from hypothesis import given
from hypothesis import strategies as st

from icms.config import validate_config
from icms.core import Severity
from icms.errors import NotFoundError, ValidationError
from icms.safety.analytics import (
    FrequencyBand,
    Violation,
    eval_rule,
    evaluate_windows,
    frequency_level,
    hourly_speeding_ratio,
)
from icms.safety.dsl import Rule, parse_rule
from icms.safety.windows import WindowFeatures

from .conftest import utc

LISBON = ZoneInfo("Europe/Lisbon")


def mk_rule(text, rid="R-0001", name="rule", enabled=True):
    return Rule(rule_id=rid, name=name, text=text, parsed=parse_rule(text), enabled=enabled)


def mk_features(post_id="p1", ws=None, avg=None, vc=0, sc=0, pc=0):
    ws = ws or utc(2023, 3, 1, 10)
    return WindowFeatures(
        post_id=post_id,
        window_start=ws,
        avg_speed=avg,
        vehicle_count=vc,
        speeding_count=sc,
        pedestrian_count=pc,
        hour_of_day=ws.astimezone(LISBON).hour,
    )


class TestEvalRule:
    RULE = mk_rule("avg_speed > 50 AND pedestrian_count >= 10 -> danger")

    def test_fires_with_severity(self):
        f = mk_features(avg=62.0, vc=3, pc=12)
        assert eval_rule(self.RULE, f) is Severity.DANGER

    def test_absent_avg_speed_means_no_violation(self):
        f = mk_features(avg=None, vc=0, pc=12)
        assert eval_rule(self.RULE, f) is None

    def test_false_expression_means_none(self):
        f = mk_features(avg=30.0, vc=1, pc=12)
        assert eval_rule(self.RULE, f) is None


def _violations_oracle(rules, features):
    """Cross product of eval_rule over enabled rules, as a multiset of keys."""
    out = []
    for f in features:
        for r in rules:
            if r.enabled and eval_rule(r, f) is not None:
                out.append((r.rule_id, f.post_id, f.window_start, r.severity))
    return sorted(out)


class TestEvaluateWindows:
    def test_no_enabled_rules(self):
        assert evaluate_windows([], [mk_features(vc=1, avg=99.0)]) == []
        disabled = mk_rule("vehicle_count >= 0 -> warning", enabled=False)
        assert evaluate_windows([disabled], [mk_features()]) == []

    def test_two_rules_fire_on_one_window(self):
        r1 = mk_rule("vehicle_count >= 1 -> warning", rid="R-0001")
        r2 = mk_rule("avg_speed > 50 -> danger", rid="R-0002")
        f = mk_features(avg=60.0, vc=2)
        vs = evaluate_windows([r1, r2], [f])
        assert [(v.rule_id, v.severity) for v in vs] == [
            ("R-0001", Severity.WARNING),
            ("R-0002", Severity.DANGER),
        ]
        assert all(v.feature_snapshot == f for v in vs)

    def test_order_by_window_then_rule(self):
        r1 = mk_rule("vehicle_count >= 0 -> warning", rid="R-0002")
        r2 = mk_rule("pedestrian_count >= 0 -> warning", rid="R-0001")
        early, late = mk_features(ws=utc(2023, 3, 1, 10)), mk_features(ws=utc(2023, 3, 1, 10, 15))
        vs = evaluate_windows([r1, r2], [late, early])
        assert [(v.window_start, v.rule_id) for v in vs] == [
            (early.window_start, "R-0001"),
            (early.window_start, "R-0002"),
            (late.window_start, "R-0001"),
            (late.window_start, "R-0002"),
        ]

    def _random_suite(self, seed):
        rng = random.Random(seed)
        texts = [
            "speeding_count >= 1 -> warning",
            "avg_speed > 45 AND vehicle_count >= 2 -> danger",
            "NOT (pedestrian_count == 0) AND hour_of_day >= 22 -> warning",
            "hour_of_day < 6 OR hour_of_day >= 23 -> warning",
        ]
        rules = [
            mk_rule(t, rid=f"R-{i:04d}", enabled=rng.random() > 0.25)
            for i, t in enumerate(texts, start=1)
        ]
        features = []
        for _ in range(300):
            vc = rng.randrange(0, 5)
            features.append(
                mk_features(
                    post_id=rng.choice(["p1", "p2", "p3"]),
                    ws=utc(2023, 3, 1) + timedelta(minutes=15 * rng.randrange(0, 400)),
                    avg=None if vc == 0 else rng.uniform(20, 70),
                    vc=vc,
                    sc=rng.randrange(0, vc + 1),
                    pc=rng.randrange(0, 15),
                )
            )
        return rules, features

    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_multiset_matches_oracle(self, seed):
        rules, features = self._random_suite(seed)
        vs = evaluate_windows(rules, features)
        got = sorted((v.rule_id, v.post_id, v.window_start, v.severity) for v in vs)
        assert got == _violations_oracle(rules, features)

    def test_snapshot_reevaluates_true(self):
        rules, features = self._random_suite(99)
        by_id = {r.rule_id: r for r in rules}
        for v in evaluate_windows(rules, features):
            assert eval_rule(by_id[v.rule_id], v.feature_snapshot) is v.severity

    def test_disabling_a_rule_subtracts_exactly_its_violations(self):
        rules, features = self._random_suite(7)
        target = rules[0]
        before = evaluate_windows(rules, features)
        without = [
            Rule(r.rule_id, r.name, r.text, r.parsed, enabled=False) if r is target else r
            for r in rules
        ]
        after = evaluate_windows(without, features)
        assert [v for v in before if v.rule_id != target.rule_id] == after


class TestFrequencyLevel:
    def _violation(self, ws, post="p1", rid="R-0001"):
        return Violation(
            rule_id=rid,
            post_id=post,
            window_start=ws,
            severity=Severity.WARNING,
            feature_snapshot=mk_features(post_id=post, ws=ws),
        )

    def test_zero_matches_low(self, config):
        level = frequency_level([], "p1", "R-0001", utc(2023, 3, 8), config)
        assert (level.count, level.band) == (0, FrequencyBand.LOW)

    def test_lower_cut_inclusive(self, config):
        now = utc(2023, 3, 8)
        vs = [self._violation(now - timedelta(hours=h)) for h in (1, 2, 3)]
        level = frequency_level(vs, "p1", "R-0001", now, config)
        assert (level.count, level.band) == (3, FrequencyBand.MEDIUM)

    def test_upper_cut_inclusive_means_high(self, config):
        now = utc(2023, 3, 8)
        vs = [self._violation(now - timedelta(hours=h)) for h in range(1, 11)]
        level = frequency_level(vs, "p1", "R-0001", now, config)
        assert (level.count, level.band) == (10, FrequencyBand.HIGH)

    def test_horizon_is_left_open_right_closed(self, config):
        now = utc(2023, 3, 8)
        at_now = self._violation(now)
        at_edge = self._violation(now - timedelta(days=config.frequency_horizon_days))
        just_inside = self._violation(now - timedelta(days=config.frequency_horizon_days) + timedelta(seconds=1))
        level = frequency_level([at_now, at_edge, just_inside], "p1", "R-0001", now, config)
        assert level.count == 2

    def test_other_posts_and_rules_excluded(self, config):
        now = utc(2023, 3, 8)
        vs = [
            self._violation(now, post="p1", rid="R-0001"),
            self._violation(now, post="p2", rid="R-0001"),
            self._violation(now, post="p1", rid="R-0002"),
        ]
        assert frequency_level(vs, "p1", "R-0001", now, config).count == 1

    @given(st.lists(st.tuples(
        st.sampled_from(["p1", "p2"]),
        st.sampled_from(["R-0001", "R-0002"]),
        st.integers(min_value=0, max_value=20 * 24),
    ), max_size=80))
    def test_count_matches_brute_force(self, spec):
        config = validate_config({})
        now = utc(2023, 3, 21)
        vs = [self._violation(now - timedelta(hours=h), post=p, rid=r) for p, r, h in spec]
        horizon = timedelta(days=config.frequency_horizon_days)
        expected = sum(
            1
            for p, r, h in spec
            if p == "p1" and r == "R-0001" and timedelta(hours=h) < horizon
        )
        assert frequency_level(vs, "p1", "R-0001", now, config).count == expected


class TestHourlyRatio:
    def _features_at(self, hour_local, speeding, peds, posts_map, config, day=10):
        # Build a January window whose Lisbon local hour equals hour_local.
        ws = utc(2023, 1, day, hour_local)
        return WindowFeatures(
            post_id="AV-01-P1",
            window_start=ws,
            avg_speed=40.0 if speeding or peds else None,
            vehicle_count=max(speeding, 1) if speeding or peds else 0,
            speeding_count=speeding,
            pedestrian_count=peds,
            hour_of_day=hour_local,
        )

    def test_simple_ratio(self, posts_map, config):
        f = self._features_at(14, 5, 10, posts_map, config)
        hr = hourly_speeding_ratio("AV-01", utc(2023, 1, 1), utc(2023, 2, 1), [f], posts_map, config)
        assert hr.ratios[14] == 0.5

    def test_zero_pedestrians_clamps_denominator(self, posts_map, config):
        f = self._features_at(3, 3, 0, posts_map, config)
        hr = hourly_speeding_ratio("AV-01", utc(2023, 1, 1), utc(2023, 2, 1), [f], posts_map, config)
        assert hr.ratios[3] == 3.0

    def test_exceeded_is_strict(self, posts_map, config):
        fa = self._features_at(5, 10, 10, posts_map, config)
        hr = hourly_speeding_ratio("AV-01", utc(2023, 1, 1), utc(2023, 2, 1), [fa], posts_map, config)
        assert hr.ratios[5] == 1.0 and not hr.exceeded[5]
        fb = self._features_at(6, 11, 10, posts_map, config)
        hr = hourly_speeding_ratio("AV-01", utc(2023, 1, 1), utc(2023, 2, 1), [fb], posts_map, config)
        assert hr.exceeded[6]

    def test_unknown_street(self, posts_map, config):
        with pytest.raises(NotFoundError, match="street"):
            hourly_speeding_ratio("GHOST", utc(2023, 1, 1), utc(2023, 2, 1), [], posts_map, config)

    def test_empty_range_rejected(self, posts_map, config):
        with pytest.raises(ValidationError, match="range"):
            hourly_speeding_ratio("AV-01", utc(2023, 2, 1), utc(2023, 2, 1), [], posts_map, config)

    def test_month_of_features_matches_brute_force(self, posts_map, config):
        rng = random.Random(42)
        features = []
        for day in range(1, 29):
            for hour in range(24):
                for pid in posts_map:
                    vc = rng.randrange(0, 6)
                    features.append(
                        WindowFeatures(
                            post_id=pid,
                            window_start=utc(2023, 1, day, hour),
                            avg_speed=None if vc == 0 else 40.0,
                            vehicle_count=vc,
                            speeding_count=rng.randrange(0, vc + 1),
                            pedestrian_count=rng.randrange(0, 9),
                            hour_of_day=hour,
                        )
                    )
        start, end = utc(2023, 1, 5), utc(2023, 1, 20)
        hr = hourly_speeding_ratio("AV-01", start, end, features, posts_map, config)

        street_posts = {"AV-01-P1", "AV-01-P2"}
        speeding, peds = [0] * 24, [0] * 24
        for f in features:
            if f.post_id in street_posts and start <= f.window_start < end:
                speeding[f.hour_of_day] += f.speeding_count
                peds[f.hour_of_day] += f.pedestrian_count
        for h in range(24):
            assert hr.speeding[h] == speeding[h]
            assert hr.pedestrians[h] == peds[h]
            assert hr.ratios[h] == speeding[h] / max(peds[h], 1)
            assert hr.exceeded[h] == (hr.ratios[h] > config.speeding_ratio_threshold)

    def test_invariant_under_feature_permutation(self, posts_map, config):
        rng = random.Random(3)
        features = [
            self._features_at(h, rng.randrange(0, 4), rng.randrange(0, 6), posts_map, config, day=d)
            for d in range(1, 10)
            for h in range(0, 24, 3)
        ]
        shuffled = features[:]
        rng.shuffle(shuffled)
        a = hourly_speeding_ratio("AV-01", utc(2023, 1, 1), utc(2023, 2, 1), features, posts_map, config)
        b = hourly_speeding_ratio("AV-01", utc(2023, 1, 1), utc(2023, 2, 1), shuffled, posts_map, config)
        assert a == b
