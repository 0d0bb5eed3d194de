import numpy as np

from ..dynamics.correspondence import (
    corr_limit,
    corr_renorm_compose,
    corr_renorm_family,
    correspondence_scan,
)
from ..dynamics.elementary import fit_decay_ratio, plan_renormalization
from ..dynamics.sampling import disk_samples
from ..models.results import ExperimentResult, Table
from .base_experiment import BaseExperiment


class CorrespondenceExperiment(BaseExperiment):
    """Renormalization of the branch iterates of an elementary correspondence."""

    def execute(self) -> ExperimentResult:
        options = self.config.correspondence
        C = options.build()
        plan = plan_renormalization(C.entire_map(), options.N).require()
        result = ExperimentResult()
        self._record_hypotheses(result, (c.to_dict() for c in plan.checks))

        rows = correspondence_scan(
            C, options.N, options.radius, options.grid, options.n_list, options.order
        )
        scan = Table(name="correspondence", columns=["n", "sup_error"])
        for row in rows:
            scan.add(row.n, row.sup_error)
        limit = Table(name="corr_limit", columns=["degree", "coef_re", "coef_im"])
        self._add_coefficients(limit, corr_limit(C, options.N, options.order).coeffs)
        result.tables.extend([scan, limit])

        # direct evaluation of phi_n o chi_n against the closed form
        n = options.n_list[0]
        chi = corr_renorm_family(C, options.N, n, options.order)
        u = disk_samples(min(options.radius, 0.5 * chi.validity_radius), options.grid)
        v = self.rng.uniform(-1.0, 1.0, u.shape) + 1j * self.rng.uniform(-1.0, 1.0, u.shape)
        direct = chi.renormalized(u, v)
        closed = corr_renorm_compose(C, options.N, n, options.order)(u, v)
        cancellation = float(
            np.max(np.maximum(np.abs(direct[0] - closed[0]), np.abs(direct[1] - closed[1])))
        )

        result.summary = {
            "N": options.N,
            "rate": plan.rate,
            "rho": C.rho,
            "fitted_ratio": fit_decay_ratio([r.n for r in rows], [r.sup_error for r in rows]),
            "cancellation_error": cancellation,
        }
        self.logger.info("correspondence_scanned", **result.summary)
        return result
