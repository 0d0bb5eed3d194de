import numpy as np

from ..dynamics.basin import (
    Automorphism2D,
    check_resonances,
    conjugation_approx,
    find_fixed_point,
    normalizer_degree,
    pushed_renorm_family,
)
from ..dynamics.elementary import ElementaryMap, HypothesisCheck, plan_renormalization
from ..dynamics.sampling import polydisk_samples
from ..models.config import BasinSection
from ..models.results import ExperimentResult, Table
from ..series import Jet
from .base_experiment import BaseExperiment

INVERSE_CONSISTENCY_TOLERANCE = 1e-8


def build_automorphism(options: BasinSection) -> Automorphism2D:
    """The automorphism described by a ``[basin]`` section."""
    if options.automorphism == "foreword":
        H = Automorphism2D.foreword(options.lambda1, options.lambda2)
    else:
        linear = ElementaryMap(options.lambda1, options.lambda2)
        H = Automorphism2D.from_elementary(linear, "diagonal")
        if options.automorphism == "shear_diagonal":
            H = H.conjugated_by(Automorphism2D.shear(Jet.from_polynomial(options.shear)))
    if any(s != 0 for s in options.shift):
        H = H.translated(options.shift)
    return H


class BasinExperiment(BaseExperiment):
    """Conjugation residuals and the pushed renormalizing family."""

    def execute(self) -> ExperimentResult:
        options = self.config.basin
        tolerances = self.config.tolerance
        H = build_automorphism(options)

        probe = polydisk_samples(options.probe_radius, options.probe_grid, options.shift)
        H.check_inverse(*probe, tol=tolerances.verification)

        guess = options.guess or [options.shift[0] + 0.01, options.shift[1] + 0.01]
        fixed = find_fixed_point(H.forward, guess, tol=tolerances.fixed_point)
        result = ExperimentResult()
        self._record_hypotheses(
            result,
            (
                HypothesisCheck(f"|lambda{i}| > 1", abs(lam), 1.0, ">").to_dict()
                for i, lam in enumerate(fixed.multipliers, start=1)
            ),
        )
        fixed.require_repulsive()
        degree = normalizer_degree(fixed.multipliers, options.degree)
        check_resonances(fixed.multipliers, degree, tolerances.resonance)
        T = ElementaryMap(*fixed.multipliers)
        self._record_hypotheses(
            result, (c.to_dict() for c in plan_renormalization(T, options.N).require().checks)
        )

        table = Table(name="basin", columns=["n", "residual", "pushed_error"])
        approx = None
        for n in options.depths:
            approx = conjugation_approx(
                H,
                fixed,
                n,
                degree=options.degree,
                probe_radius=options.probe_radius,
                probe_grid=options.probe_grid,
                resonance_tol=tolerances.resonance,
            )
            pushed = pushed_renorm_family(H, approx, options.N)
            table.add(n, approx.residual, pushed.error)
        result.tables.append(table)

        consistency = None
        if options.consistency_points:
            z = self._random_points(options.probe_radius, options.consistency_points)
            w = self._random_points(options.probe_radius, options.consistency_points)
            consistency = approx.inverse_consistency(z, w)
            if consistency > INVERSE_CONSISTENCY_TOLERANCE:
                self.logger.warning(
                    "inverse_consistency_degraded",
                    error=consistency,
                    tolerance=INVERSE_CONSISTENCY_TOLERANCE,
                )

        lam1, lam2 = fixed.multipliers
        result.summary = {
            "automorphism": H.name,
            "fixed_point": [[c.real, c.imag] for c in fixed.point],
            "multipliers": [[lam1.real, lam1.imag], [lam2.real, lam2.imag]],
            "normalizer_degree": degree,
            "rate": approx.rate,
            "inverse_consistency": consistency,
        }
        self.logger.info("basin_finished", automorphism=H.name, degree=degree)
        return result

    def _random_points(self, radius: float, count: int) -> np.ndarray:
        """Uniform points in the square of side ``radius`` centred at 0."""
        real = self.rng.uniform(-0.5, 0.5, count)
        imag = self.rng.uniform(-0.5, 0.5, count)
        return radius * (real + 1j * imag)
