from .metrics import record_checks, record_run, registry, runs_total, write_metrics
