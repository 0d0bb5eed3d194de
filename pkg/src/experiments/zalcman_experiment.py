import numpy as np

from ..models.results import ExperimentResult, Table
from ..rescaling import MetricField, Polydisk, SampledFamily, divergence_witness, zalcman_extract
from .base_experiment import BaseExperiment


def _linear(n: int, z: np.ndarray) -> np.ndarray:
    return n * z


def _linear_derivative(n: int, z: np.ndarray) -> np.ndarray:
    return np.full(z.shape, float(n), dtype=np.complex128)


def _power(n: int, z: np.ndarray) -> np.ndarray:
    return z**n


def _power_derivative(n: int, z: np.ndarray) -> np.ndarray:
    return n * z ** (n - 1)


FAMILIES = {
    "linear": (_linear, _linear_derivative),
    "power": (_power, _power_derivative),
}


class ZalcmanExperiment(BaseExperiment):
    """Rescaling sequence of a one-variable non-normal family."""

    def execute(self) -> ExperimentResult:
        options = self.config.zalcman
        domain = Polydisk.disk(options.center, options.radius)
        f, df = FAMILIES[options.family]
        family = SampledFamily.scalar(f, domain, df)

        sample = domain.sample(options.grid)
        MetricField(sample, np.zeros(len(sample))).check_metric_axioms(
            self.rng, options.axiom_triples, self.config.tolerance.metric
        )

        sequence = zalcman_extract(
            family, options.v, options.count, max_index=options.max_index, grid=options.grid
        )
        table = Table(name="zalcman", columns=["n", "v_re", "v_im", "r", "deriv0"])
        for entry in sequence.entries:
            center = entry.center[0]
            table.add(entry.n, center.real, center.imag, entry.scale, entry.deriv0)
        result = ExperimentResult(
            tables=[table],
            summary={
                "family": options.family,
                "entries": len(sequence.entries),
                "max_slack": max(e.slack for e in sequence.entries),
            },
        )

        if options.witness:
            witness = divergence_witness(
                self.config.map.build(),
                options.witness_n_max,
                options.witness_threshold,
                self.config.map.order,
            )
            witness_table = Table(name="zalcman_witness", columns=["n", "fs_derivative"])
            for n, value in witness.values:
                witness_table.add(n, value)
            result.tables.append(witness_table)
            result.summary["witness_crossing"] = witness.crossing
        self.logger.info("zalcman_extracted", **result.summary)
        return result
