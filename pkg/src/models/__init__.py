from .config import ExperimentConfig, Mode, parse_config, validate_config
from .results import ExperimentResult, FileRecord, RunManifest, Table
