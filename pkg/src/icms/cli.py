"""Command line entry points: serve, generate, replay, report.

Exit codes: 0 success, 2 bad data or arguments, 3 bad configuration.
Reports and summaries go to stdout as canonical JSON unless --out is given;
progress and timing go to stderr.
"""

from __future__ import annotations

import os
import sys
from pathlib import Path
from typing import Callable, Optional

import click

from .config import Config, load_config
from .core import parse_instant
from .datagen import DatasetProfile, dataset_hash, generate_dataset
from .errors import ConfigError, IcmsError
from .replay import build_artifacts, run_replay
from .service import canonical_json


def _run(body: Callable[[], None]) -> None:
    try:
        body()
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(3)
    except IcmsError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


def _emit(text: str, out_path: Optional[Path]) -> None:
    if out_path is None:
        click.echo(text, nl=False)
    else:
        out_path.parent.mkdir(parents=True, exist_ok=True)
        out_path.write_text(text, encoding="utf-8", newline="\n")


def _load_config(config_path: Optional[Path]) -> Config:
    return load_config(config_path) if config_path is not None else Config()


@click.group()
def main() -> None:
    """City telemetry engines: safety rules, energy forecasts, maintenance."""


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=None, help="Overrides ICMS_PORT [default: 8000].")
def serve(host: str, port: Optional[int]) -> None:
    """Run the HTTP service (config via ICMS_CONFIG, data via ICMS_DATA_DIR)."""

    def body() -> None:
        import uvicorn

        from .server import build_engine_from_env

        engine, app = build_engine_from_env()
        chosen = port if port is not None else int(os.environ.get("ICMS_PORT", "8000"))
        click.echo(
            f"recovered {engine.last_seq} events; listening on {host}:{chosen}", err=True
        )
        try:
            uvicorn.run(app, host=host, port=chosen, log_level="warning")
        finally:
            engine.close()

    _run(body)


@main.command()
@click.option("--seed", type=int, required=True)
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True)
@click.option("--streets", type=int, default=3, show_default=True)
@click.option("--posts-per-street", type=int, default=2, show_default=True)
@click.option("--months", type=int, default=2, show_default=True)
@click.option("--noise", type=float, default=0.0, show_default=True)
@click.option("--clusters", type=int, default=3, show_default=True)
def generate(
    seed: int,
    out_dir: Path,
    streets: int,
    posts_per_street: int,
    months: int,
    noise: float,
    clusters: int,
) -> None:
    """Write a reproducible synthetic dataset plus its truth sidecar."""

    def body() -> None:
        profile = DatasetProfile(
            seed=seed,
            streets=streets,
            posts_per_street=posts_per_street,
            months=months,
            noise_sigma=noise,
            detection_clusters=clusters,
        )
        generate_dataset(profile, out_dir)
        click.echo(
            canonical_json(
                {
                    "dataset_id": profile.dataset_id,
                    "hash": dataset_hash(out_dir),
                    "directory": str(out_dir),
                }
            ),
            nl=False,
        )

    _run(body)


@main.command()
@click.option("--dataset", "dataset_dir", type=click.Path(path_type=Path), required=True)
@click.option("--config", "config_path", type=click.Path(path_type=Path), default=None)
@click.option("--boundary", default=None, help="Train/holdout split instant (RFC 3339).")
@click.option("--out", "out_path", type=click.Path(path_type=Path), default=None)
def replay(
    dataset_dir: Path,
    config_path: Optional[Path],
    boundary: Optional[str],
    out_path: Optional[Path],
) -> None:
    """Replay a recorded dataset through the engines; emit the report."""

    def body() -> None:
        config = _load_config(config_path)
        chosen = parse_instant(boundary, "boundary") if boundary else None
        outcome = run_replay(dataset_dir, config, chosen)
        _emit(outcome.report.canonical(), out_path)
        click.echo(
            f"replay completed in {outcome.report.duration_seconds:.2f}s", err=True
        )

    _run(body)


@main.command()
@click.option("--dataset", "dataset_dir", type=click.Path(path_type=Path), required=True)
@click.option("--config", "config_path", type=click.Path(path_type=Path), default=None)
@click.option("--boundary", default=None, help="Train/holdout split instant (RFC 3339).")
@click.option(
    "--artifacts",
    "artifacts_dir",
    type=click.Path(path_type=Path),
    default=None,
    help="Also write every figure-analogue JSON document into this directory.",
)
@click.option("--out", "out_path", type=click.Path(path_type=Path), default=None)
def report(
    dataset_dir: Path,
    config_path: Optional[Path],
    boundary: Optional[str],
    artifacts_dir: Optional[Path],
    out_path: Optional[Path],
) -> None:
    """Replay a dataset and emit the full set of derived JSON documents."""

    def body() -> None:
        config = _load_config(config_path)
        chosen = parse_instant(boundary, "boundary") if boundary else None
        outcome = run_replay(dataset_dir, config, chosen)
        docs = build_artifacts(outcome)
        if artifacts_dir is not None:
            artifacts_dir.mkdir(parents=True, exist_ok=True)
            for name, text in sorted(docs.items()):
                (artifacts_dir / name).write_text(text, encoding="utf-8", newline="\n")
            click.echo(f"wrote {len(docs)} documents to {artifacts_dir}", err=True)
        _emit(docs["report.json"], out_path)
        click.echo(
            f"replay completed in {outcome.report.duration_seconds:.2f}s", err=True
        )

    _run(body)


if __name__ == "__main__":
    main()
