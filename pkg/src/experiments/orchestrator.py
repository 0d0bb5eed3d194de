import csv
import hashlib
import io
import json
import os
import tempfile
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, Optional, Type

import structlog

from ..errors import RenormalizationError
from ..models.config import ExperimentConfig, Mode
from ..models.results import ExperimentResult, FileRecord, RunManifest, Table
from ..monitoring import record_run, write_metrics
from ..settings import Settings, load_settings
from .base_experiment import BaseExperiment
from .basin_experiment import BasinExperiment
from .correspondence_experiment import CorrespondenceExperiment
from .elementary_experiments import (
    CounterexampleExperiment,
    IterateExperiment,
    LimitExperiment,
    RenormExperiment,
    ScanExperiment,
)
from .zalcman_experiment import ZalcmanExperiment

logger = structlog.get_logger(__name__)

MANIFEST_NAME = "manifest.json"

EXPERIMENTS: Dict[Mode, Type[BaseExperiment]] = {
    Mode.ITERATE: IterateExperiment,
    Mode.RENORM: RenormExperiment,
    Mode.LIMIT: LimitExperiment,
    Mode.SCAN: ScanExperiment,
    Mode.ZALCMAN: ZalcmanExperiment,
    Mode.COUNTEREXAMPLE: CounterexampleExperiment,
    Mode.CORRESPONDENCE: CorrespondenceExperiment,
    Mode.BASIN: BasinExperiment,
}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _format_cell(value) -> str:
    """``repr``-exact floats so identical runs give identical bytes."""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def render_csv(table: Table) -> bytes:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_format_cell(v) for v in row])
    return buffer.getvalue().encode("utf-8")


def _atomic_write(path: Path, payload: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_default(value):
    if isinstance(value, complex):
        return [value.real, value.imag]
    if hasattr(value, "tolist"):
        return value.tolist()
    return str(value)


def manifest_bytes(manifest: RunManifest) -> bytes:
    payload = json.dumps(manifest.model_dump(), indent=2, sort_keys=True, default=_json_default)
    return (payload + "\n").encode("utf-8")


def sha256_file(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class ExperimentOrchestrator:
    """Runs one experiment and owns its output directory."""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or load_settings()

    def output_dir(self, config: ExperimentConfig, out: Optional[str] = None) -> Path:
        return Path(out or config.output_dir or self.settings.output_dir)

    def run(self, config: ExperimentConfig, out: Optional[str] = None) -> RunManifest:
        """Execute the experiment, then write tables, metrics and the manifest.

        Tables are written only after every table of the mode has been
        computed, so a failed run leaves just the manifest behind.

        Raises:
            RenormalizationError: re-raised after the failed manifest is written
        """
        run_dir = self.output_dir(config, out)
        run_dir.mkdir(parents=True, exist_ok=True)
        manifest = RunManifest(
            mode=config.mode.value,
            config=config.model_dump(mode="json"),
            started_at=_now(),
        )
        experiment = EXPERIMENTS[config.mode](config)
        started = time.perf_counter()
        try:
            logger.info("run_started", mode=config.mode.value, out=str(run_dir))
            result = experiment.execute()
        except RenormalizationError as e:
            self._fail(manifest, run_dir, e, e.to_dict(), started)
            raise
        except Exception as e:
            details = {
                "type": e.__class__.__name__,
                "message": str(e),
                "exit_code": 1,
                "context": {},
            }
            self._fail(manifest, run_dir, e, details, started)
            raise

        self._write_tables(result, run_dir, manifest)
        manifest.hypotheses = result.hypotheses
        manifest.summary = result.summary
        manifest.status = "succeeded"
        manifest.finished_at = _now()
        record_run(config.mode.value, "succeeded", time.perf_counter() - started)
        self._write_metrics(run_dir, manifest)
        self._write_manifest(run_dir, manifest)
        logger.info("run_finished", mode=config.mode.value, files=len(manifest.files))
        return manifest

    def _write_tables(self, result: ExperimentResult, run_dir: Path, manifest: RunManifest) -> None:
        for table in result.tables:
            payload = render_csv(table)
            _atomic_write(run_dir / table.filename, payload)
            manifest.files.append(
                FileRecord(
                    name=table.filename,
                    sha256=hashlib.sha256(payload).hexdigest(),
                    rows=len(table.rows),
                )
            )

    def _write_metrics(self, run_dir: Path, manifest: RunManifest) -> None:
        path = write_metrics(run_dir, self.settings.enable_metrics)
        if path is not None:
            manifest.files.append(FileRecord(name=path.name, sha256=sha256_file(path)))

    def _write_manifest(self, run_dir: Path, manifest: RunManifest) -> None:
        _atomic_write(run_dir / MANIFEST_NAME, manifest_bytes(manifest))

    def _fail(
        self, manifest: RunManifest, run_dir: Path, error: Exception, details: dict, started: float
    ) -> None:
        logger.error("run_failed", mode=manifest.mode, error=str(error), type=details["type"])
        manifest.status = "failed"
        manifest.exit_code = details["exit_code"]
        manifest.error = details
        manifest.finished_at = _now()
        record_run(manifest.mode, "failed", time.perf_counter() - started)
        self._write_manifest(run_dir, manifest)


def write_failure_manifest(run_dir: Path, mode: str, error: RenormalizationError) -> RunManifest:
    """Manifest for a run rejected before an experiment could start."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    now = _now()
    manifest = RunManifest(
        mode=mode,
        status="failed",
        exit_code=error.exit_code,
        started_at=now,
        finished_at=now,
        error=error.to_dict(),
    )
    _atomic_write(run_dir / MANIFEST_NAME, manifest_bytes(manifest))
    return manifest


def run(
    config: ExperimentConfig, out: Optional[str] = None, settings: Optional[Settings] = None
) -> RunManifest:
    """Run ``config`` and return its manifest."""
    return ExperimentOrchestrator(settings).run(config, out)
