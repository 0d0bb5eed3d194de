from abc import ABC, abstractmethod
from typing import Iterable

import numpy as np
import structlog

from ..models.config import ExperimentConfig
from ..models.results import ExperimentResult, Table
from ..monitoring import record_checks


class BaseExperiment(ABC):
    """Base class for all experiment modes."""

    def __init__(self, config: ExperimentConfig):
        """Initialize the experiment.

        Args:
            config (ExperimentConfig): The resolved experiment config
        """
        self.config = config
        self.logger = structlog.get_logger(self.__class__.__name__)
        self.rng = np.random.default_rng(config.seed)

    @abstractmethod
    def execute(self) -> ExperimentResult:
        """Compute every table of the mode without touching the filesystem.

        Returns:
            ExperimentResult: Tables, hypothesis records and a summary
        """

    def _record_hypotheses(self, result: ExperimentResult, checks: Iterable[dict]) -> None:
        checks = list(checks)
        result.hypotheses.extend(checks)
        record_checks(checks)

    @staticmethod
    def _add_coefficients(table: Table, coeffs: np.ndarray, *prefix) -> None:
        for degree, c in enumerate(np.asarray(coeffs, dtype=np.complex128)):
            table.add(*prefix, degree, float(c.real), float(c.imag))
