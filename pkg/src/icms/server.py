"""HTTP surface over the Engine.

All engines share one process and one port; route namespaces stay disjoint
and any engine's routes can be switched off to emulate separate deployment.
Every error response is {"error": {"code", "message", ...}} with a machine
code, and rule syntax errors carry their 1-based line/column location.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Mapping, Optional

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from .config import Config, load_config
from .core import IssueClass, IssueStatus, Urgency, parse_instant
from .energy.lighting import BlockBasis
from .errors import (
    IcmsError,
    RecordParseError,
    RuleSyntaxError,
    ValidationError,
)
from .service import (
    Engine,
    forecast_to_dict,
    load_posts_file,
    rule_to_dict,
    violation_to_dict,
)

_STATUS_BY_CODE = {
    "VALIDATION": 400,
    "RULE_SYNTAX": 400,
    "DATA": 400,
    "NOT_FOUND": 404,
    "STATE": 409,
    "INSUFFICIENT_DATA": 422,
    "CONFIG": 500,
    "INTERNAL": 500,
    "STORAGE": 503,
}

ENGINES = ("safety", "energy", "maintenance")


def error_body(exc: IcmsError) -> dict:
    body: dict[str, Any] = {"code": exc.code, "message": str(exc)}
    if isinstance(exc, RuleSyntaxError):
        body["location"] = {"line": exc.line, "column": exc.column}
    return {"error": body}


def _error_response(exc: IcmsError) -> JSONResponse:
    return JSONResponse(
        status_code=_STATUS_BY_CODE.get(exc.code, 500), content=error_body(exc)
    )


async def _read_batch(request: Request) -> list[Any]:
    """Accept a JSON array, a single JSON object, or JSONL. A body that is
    not syntactically decodable is rejected whole; nothing gets applied."""
    raw = (await request.body()).decode("utf-8", errors="replace")
    stripped = raw.strip()
    if not stripped:
        return []
    try:
        decoded = json.loads(stripped)
        return decoded if isinstance(decoded, list) else [decoded]
    except json.JSONDecodeError:
        pass
    objects: list[Any] = []
    for lineno, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            objects.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise RecordParseError(f"line {lineno}: malformed JSON: {exc.msg}", offset=exc.pos)
    return objects


async def _read_json_object(request: Request) -> dict:
    raw = (await request.body()).decode("utf-8", errors="replace")
    try:
        obj = json.loads(raw) if raw.strip() else {}
    except json.JSONDecodeError as exc:
        raise ValidationError(f"request body is not valid JSON: {exc.msg}")
    if not isinstance(obj, dict):
        raise ValidationError("request body must be a JSON object")
    return obj


def _opt_instant(value: Optional[str], field: str):
    return None if value is None else parse_instant(value, field)


def _opt_enum(enum_cls, value: Optional[str], field: str):
    if value is None:
        return None
    try:
        return enum_cls(value)
    except ValueError:
        allowed = ", ".join(e.value for e in enum_cls)
        raise ValidationError(f"{field} must be one of: {allowed}")


def _opt_float(value: Optional[str], field: str) -> Optional[float]:
    if value is None:
        return None
    try:
        return float(value)
    except ValueError:
        raise ValidationError(f"{field} must be a number")


def _require(value: Optional[str], field: str) -> str:
    if value is None:
        raise ValidationError(f"missing required query parameter: {field}")
    return value


def create_app(
    engine: Engine,
    disabled_engines: tuple[str, ...] = (),
    ui_dir: Optional[Path] = None,
) -> FastAPI:
    for name in disabled_engines:
        if name not in ENGINES:
            raise ValidationError(f"unknown engine name: {name!r}")
    app = FastAPI(title="icms", docs_url=None, redoc_url=None, openapi_url=None)

    @app.exception_handler(IcmsError)
    async def _icms_error(request: Request, exc: IcmsError) -> JSONResponse:
        return _error_response(exc)

    class _DisabledError(IcmsError):
        code = "STATE"

    def _guard(name: str) -> None:
        if name in disabled_engines:
            raise _DisabledError(f"{name} engine routes are disabled on this instance")

    # -- ingestion ---------------------------------------------------------

    @app.post("/ingest/radar")
    async def ingest_radar(request: Request):
        _guard("safety")
        return engine.ingest("radar", await _read_batch(request))

    @app.post("/ingest/pedestrians")
    async def ingest_pedestrians(request: Request):
        _guard("safety")
        return engine.ingest("pedestrian", await _read_batch(request))

    @app.post("/ingest/detections")
    async def ingest_detections(request: Request):
        _guard("maintenance")
        return engine.ingest("detection", await _read_batch(request))

    # -- rules -------------------------------------------------------------

    @app.get("/rules")
    async def list_rules():
        _guard("safety")
        return {"rules": [rule_to_dict(r) for r in engine.list_rules()]}

    @app.post("/rules")
    async def create_rule(request: Request):
        _guard("safety")
        body = await _read_json_object(request)
        rule = engine.create_rule(
            name=str(body.get("name", "")),
            text=_require_body_field(body, "text"),
            enabled=bool(body.get("enabled", True)),
        )
        return JSONResponse(status_code=201, content=rule_to_dict(rule))

    @app.get("/rules/{rule_id}")
    async def get_rule(rule_id: str):
        _guard("safety")
        return rule_to_dict(engine.get_rule(rule_id))

    @app.put("/rules/{rule_id}")
    async def put_rule(rule_id: str, request: Request):
        _guard("safety")
        body = await _read_json_object(request)
        current = engine.get_rule(rule_id)
        rule = engine.update_rule(
            rule_id,
            name=str(body.get("name", current.name)),
            text=str(body.get("text", current.text)),
            enabled=bool(body.get("enabled", current.enabled)),
        )
        return rule_to_dict(rule)

    @app.delete("/rules/{rule_id}")
    async def delete_rule(rule_id: str):
        _guard("safety")
        engine.delete_rule(rule_id)
        return Response(status_code=204)

    # -- safety reads --------------------------------------------------------

    @app.get("/violations")
    async def violations(request: Request):
        _guard("safety")
        params = request.query_params   # `from` is a Python keyword
        found = engine.violations(
            post_id=params.get("post_id"),
            from_ts=_opt_instant(params.get("from"), "from"),
            to_ts=_opt_instant(params.get("to"), "to"),
        )
        totals: dict[str, int] = {}
        for v in found:
            totals[v.severity.value] = totals.get(v.severity.value, 0) + 1
        return {"violations": [violation_to_dict(v) for v in found], "totals": totals}

    @app.get("/safety/ratio")
    async def safety_ratio(request: Request):
        _guard("safety")
        params = request.query_params
        ratio = engine.ratio(
            _require(params.get("street_id"), "street_id"),
            parse_instant(_require(params.get("from"), "from"), "from"),
            parse_instant(_require(params.get("to"), "to"), "to"),
            threshold=_opt_float(params.get("threshold"), "threshold"),
        )
        return {
            "street_id": ratio.street_id,
            "speeding": list(ratio.speeding),
            "pedestrians": list(ratio.pedestrians),
            "ratios": list(ratio.ratios),
            "exceeded": list(ratio.exceeded),
            "threshold": ratio.threshold,
        }

    # -- energy --------------------------------------------------------------

    @app.get("/energy/forecast")
    async def energy_forecast(street_id: Optional[str] = None):
        _guard("energy")
        return forecast_to_dict(engine.forecast(_require(street_id, "street_id")))

    @app.get("/energy/blocks")
    async def energy_blocks(
        street_id: Optional[str] = None,
        date: Optional[str] = None,
        basis: Optional[str] = None,
    ):
        _guard("energy")
        chosen = _opt_enum(BlockBasis, basis, "basis") or BlockBasis.OBSERVED
        blocks = engine.blocks(_require(street_id, "street_id"), chosen, on_date=date)
        return {"blocks": [b.to_dict() for b in blocks]}

    @app.get("/energy/recommendations")
    async def energy_recommendations(
        street_id: Optional[str] = None,
        basis: Optional[str] = None,
        dim_level: Optional[str] = None,
        date: Optional[str] = None,
    ):
        _guard("energy")
        chosen = _opt_enum(BlockBasis, basis, "basis") or BlockBasis.FORECAST
        recs = engine.recommendations(
            _require(street_id, "street_id"),
            basis=chosen,
            dim_level=_opt_float(dim_level, "dim_level"),
            on_date=date,
        )
        return {"recommendations": [r.to_dict() for r in recs]}

    @app.post("/energy/train")
    async def energy_train(request: Request):
        _guard("energy")
        body = await _read_json_object(request)
        return engine.train(
            parse_instant(_require_body_field(body, "from"), "from"),
            parse_instant(_require_body_field(body, "to"), "to"),
        )

    # -- maintenance -----------------------------------------------------------

    @app.get("/issues")
    async def list_issues(request: Request):
        _guard("maintenance")
        params = request.query_params   # `class` is a Python keyword
        found = engine.issues(
            status=_opt_enum(IssueStatus, params.get("status"), "status"),
            issue_class=_opt_enum(IssueClass, params.get("class"), "class"),
            min_urgency=_opt_enum(Urgency, params.get("min_urgency"), "min_urgency"),
        )
        return {"issues": [i.to_dict() for i in found]}

    @app.post("/issues/{issue_id}/acknowledge")
    async def acknowledge_issue(issue_id: str):
        _guard("maintenance")
        return engine.transition_issue(issue_id, "acknowledge").to_dict()

    @app.post("/issues/{issue_id}/resolve")
    async def resolve_issue(issue_id: str):
        _guard("maintenance")
        return engine.transition_issue(issue_id, "resolve").to_dict()

    @app.get("/issues.geojson")
    async def issues_geojson():
        _guard("maintenance")
        return engine.registry.geojson()

    # -- shared reads ------------------------------------------------------------

    @app.get("/posts")
    async def posts():
        return {"posts": [engine.posts[pid].to_dict() for pid in sorted(engine.posts)]}

    @app.get("/config")
    async def config():
        return engine.config.to_json_dict()

    @app.get("/health")
    async def health():
        return {"status": "ok", "last_seq": engine.last_seq}

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def _require_body_field(body: Mapping[str, Any], field: str) -> str:
    if field not in body:
        raise ValidationError(f"missing required field: {field}")
    return str(body[field])


def build_engine_from_env(env: Mapping[str, str] = os.environ) -> tuple[Engine, FastAPI]:
    """Boot path shared by `icms serve` and ASGI deployment.

    ICMS_CONFIG points at the config JSON, ICMS_DATA_DIR at the directory
    holding posts.jsonl and the event log, ICMS_DISABLE at a comma list of
    engines to switch off.
    """
    config = load_config(Path(env["ICMS_CONFIG"])) if env.get("ICMS_CONFIG") else Config()
    data_dir = Path(env.get("ICMS_DATA_DIR", "./data"))
    posts_path = data_dir / "posts.jsonl"
    posts = load_posts_file(posts_path) if posts_path.exists() else []
    engine = Engine(config, posts, log_path=data_dir / "events.jsonl")
    engine.start()
    disabled = tuple(
        name.strip() for name in env.get("ICMS_DISABLE", "").split(",") if name.strip()
    )
    ui_dir = Path(env["ICMS_UI_DIR"]) if env.get("ICMS_UI_DIR") else None
    app = create_app(engine, disabled_engines=disabled, ui_dir=ui_dir)
    return engine, app
