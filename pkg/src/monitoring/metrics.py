import os
from pathlib import Path
from typing import Iterable, Optional

from prometheus_client import CollectorRegistry, Counter, Histogram, write_to_textfile

# Separate from the default registry; counts accumulate over every run in the process
registry = CollectorRegistry()

runs_total = Counter(
    'holorenorm_runs_total',
    'Total count of experiment runs',
    ['mode', 'status'],
    registry=registry,
)

run_duration = Histogram(
    'holorenorm_run_duration_seconds',
    'Time spent executing an experiment',
    ['mode'],
    buckets=(0.01, 0.05, 0.1, 0.5, 1, 5, 10, 30, 60, 300),
    registry=registry,
)

hypothesis_checks_total = Counter(
    'holorenorm_hypothesis_checks_total',
    'Total count of evaluated theorem hypotheses',
    ['check', 'holds'],
    registry=registry,
)


def metrics_enabled() -> bool:
    """Whether metrics should be exported (ENABLE_METRICS, default true)."""
    return os.getenv("ENABLE_METRICS", "true").lower() == "true"


def record_run(mode: str, status: str, seconds: float) -> None:
    runs_total.labels(mode=mode, status=status).inc()
    run_duration.labels(mode=mode).observe(seconds)


def record_checks(checks: Iterable[dict]) -> None:
    """Count hypothesis checks given as ``HypothesisCheck.to_dict()`` payloads."""
    for check in checks:
        hypothesis_checks_total.labels(
            check=check["inequality"], holds=str(bool(check["holds"])).lower()
        ).inc()


def write_metrics(run_dir: Path, enabled: Optional[bool] = None) -> Optional[Path]:
    """Write the registry to ``metrics.prom`` in the run directory.

    The file holds process totals, so an in-process run after another one
    also reports the earlier counts.

    Args:
        run_dir (Path): Directory of the current run
        enabled (Optional[bool]): Override for the ENABLE_METRICS setting

    Returns:
        Optional[Path]: The written file, or None when metrics are disabled
    """
    if not (metrics_enabled() if enabled is None else enabled):
        return None
    path = Path(run_dir) / "metrics.prom"
    write_to_textfile(str(path), registry)
    return path
