from .base_experiment import BaseExperiment
from .orchestrator import EXPERIMENTS, ExperimentOrchestrator, run, write_failure_manifest
