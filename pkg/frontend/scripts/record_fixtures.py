"""Record API responses into tests/fixtures/ for the dashboard contract tests.

Runs the real service in memory, seeds a small deterministic scenario, and
saves the exact JSON bodies the UI would receive. Re-run after any API change:

    python frontend/scripts/record_fixtures.py
"""

import json
from datetime import datetime, timedelta, timezone
from pathlib import Path

from fastapi.testclient import TestClient

from icms.config import validate_config
from icms.core import SmartPost
from icms.server import create_app
from icms.service import Engine

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

# January keeps Lisbon local time equal to UTC, so the planted hours read the
# same in both clocks.
DAY0 = datetime(2023, 1, 2, tzinfo=timezone.utc)   # a Monday
DAYS = 11
PLANT_DATE = "2023-01-10"

POSTS = [
    SmartPost(f"AV-10-P{i:02d}", "AV-10", 40.6300 + i * 0.0004, -8.6500 - i * 0.0003,
              50, lamp_count=1, lamp_wattage_w=80.0, dimmable=True)
    for i in range(1, 11)
] + [
    SmartPost("RN-20-P1", "RN-20", 40.6260, -8.6550, 30,
              lamp_count=4, lamp_wattage_w=100.0, dimmable=False),
    SmartPost("RN-20-P2", "RN-20", 40.6264, -8.6546, 30,
              lamp_count=4, lamp_wattage_w=100.0, dimmable=False),
]


def iso(ts: datetime) -> str:
    return ts.strftime("%Y-%m-%dT%H:%M:%SZ")


def quiet_hours(date_iso: str) -> set[int]:
    """Night hours left without any movement. Most nights idle 22:00-02:59;
    the planted night idles exactly 22:00-01:59 so its block is 4 h long."""
    return {22, 23, 0, 1} if date_iso == PLANT_DATE else {22, 23, 0, 1, 2}


def build_events() -> tuple[list[dict], list[dict], list[dict]]:
    radar: list[dict] = []
    peds: list[dict] = []
    for day in range(DAYS):
        for hour in range(24):
            ts = DAY0 + timedelta(days=day, hours=hour)
            # a quiet hour belongs to the night that started the previous day
            night_of = (ts - timedelta(hours=12)).date().isoformat()
            if hour in (22, 23, 0, 1, 2) and hour in quiet_hours(night_of):
                continue
            for post in POSTS:
                speed = 42.0
                if post.street_id == "AV-10" and hour in (17, 18, 19):
                    speed = 63.0   # above the 50 km/h limit: speeding windows
                radar.append({
                    "post_id": post.post_id, "ts": iso(ts),
                    "class": "light_vehicle", "speed_kmh": speed,
                })
                if 8 <= hour <= 20 and hour != 19:
                    # hour 19 has speeding but no pedestrians: ratio spikes
                    peds.append({"post_id": post.post_id, "ts": iso(ts), "count": 3})
    detections = [
        {"source_id": "patrol-1", "ts": iso(DAY0 + timedelta(days=3, hours=9)),
         "class": "pothole", "confidence": 0.38, "lat": 40.6305, "lon": -8.6502},
        {"source_id": "patrol-1", "ts": iso(DAY0 + timedelta(days=3, hours=11)),
         "class": "pothole", "confidence": 0.41, "lat": 40.63052, "lon": -8.65018},
        {"source_id": "cam-07", "ts": iso(DAY0 + timedelta(days=5, hours=7)),
         "class": "flood", "confidence": 0.62, "lat": 40.6312, "lon": -8.6488,
         "image_ref": "frames/flood-0001.jpg"},
        {"source_id": "cam-07", "ts": iso(DAY0 + timedelta(days=6, hours=15)),
         "class": "fire", "confidence": 0.95, "lat": 40.6321, "lon": -8.6479,
         "image_ref": "frames/fire-0001.jpg"},
    ]
    return radar, peds, detections


def record(client: TestClient) -> dict[str, object]:
    radar, peds, detections = build_events()
    for path, batch in (("radar", radar), ("pedestrians", peds), ("detections", detections)):
        resp = client.post(f"/ingest/{path}", json=batch)
        assert resp.status_code == 200, resp.text
        assert resp.json()["quarantined"] == 0, resp.text

    out: dict[str, object] = {}
    out["posts"] = client.get("/posts").json()
    out["config"] = client.get("/config").json()

    bad = client.post("/rules", json={"name": "bad", "text": "speed >> 5 -> danger"})
    assert bad.status_code == 400, bad.text
    out["rule_syntax_error"] = bad.json()

    created = client.post(
        "/rules", json={"name": "evening speeding", "text": "avg_speed > 55 -> warning"}
    )
    assert created.status_code == 201, created.text
    out["rule_created"] = created.json()
    out["rules_list"] = client.get("/rules").json()

    scope = f"from={iso(DAY0)}&to={iso(DAY0 + timedelta(days=DAYS))}"
    out["violations"] = client.get(f"/violations?post_id=AV-10-P01&{scope}").json()
    out["ratio"] = client.get(f"/safety/ratio?street_id=AV-10&{scope}").json()

    whatif = f"/energy/recommendations?street_id=AV-10&basis=observed&date={PLANT_DATE}"
    out["recommendations_dim_03"] = client.get(f"{whatif}&dim_level=0.3").json()
    out["recommendations_dim_05"] = client.get(f"{whatif}&dim_level=0.5").json()
    out["recommendations_half_off"] = client.get(
        f"/energy/recommendations?street_id=RN-20&basis=observed&date={PLANT_DATE}"
    ).json()
    out["blocks_observed"] = client.get(
        f"/energy/blocks?street_id=AV-10&basis=observed&date={PLANT_DATE}"
    ).json()

    trained = client.post(
        "/energy/train", json={"from": iso(DAY0), "to": iso(DAY0 + timedelta(days=DAYS))}
    )
    assert trained.status_code == 200 and not trained.json()["skipped"], trained.text
    out["forecast"] = client.get("/energy/forecast?street_id=AV-10").json()
    out["blocks_forecast"] = client.get(
        "/energy/blocks?street_id=AV-10&basis=forecast"
    ).json()

    out["issues"] = client.get("/issues").json()
    out["issues_geojson"] = client.get("/issues.geojson").json()
    first_issue = out["issues"]["issues"][0]["issue_id"]  # type: ignore[index]
    out["issue_acknowledged"] = client.post(f"/issues/{first_issue}/acknowledge").json()
    return out


def main() -> None:
    engine = Engine(validate_config({}), POSTS, log_path=None)
    client = TestClient(create_app(engine))
    fixtures = record(client)

    FIXTURES.mkdir(parents=True, exist_ok=True)
    for name, body in fixtures.items():
        path = FIXTURES / f"{name}.json"
        path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")
        print(f"wrote {path.relative_to(FIXTURES.parent.parent)}")

    recs = fixtures["recommendations_dim_03"]["recommendations"]  # type: ignore[index]
    print("dim 0.3 savings:", [r["estimated_savings_kwh"] for r in recs])
    recs = fixtures["recommendations_dim_05"]["recommendations"]  # type: ignore[index]
    print("dim 0.5 savings:", [r["estimated_savings_kwh"] for r in recs])
    geo = fixtures["issues_geojson"]["features"]  # type: ignore[index]
    print("geojson features:", len(geo))


if __name__ == "__main__":
    main()
