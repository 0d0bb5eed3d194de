"""Experiments on a single elementary map: iterate, renorm, limit, scan, counterexample."""
from ..dynamics.elementary import (
    compose_iterates,
    convergence_scan,
    counterexample_table,
    fit_decay_ratio,
    iterate_closed,
    limit_psi,
    linear_renorm_limit,
    plan_renormalization,
    psi_partial,
)
from ..models.results import ExperimentResult, Table
from ..rescaling import rank_comparison
from .base_experiment import BaseExperiment


class IterateExperiment(BaseExperiment):
    """Closed-form iterates checked against repeated composition."""

    def execute(self) -> ExperimentResult:
        F = self.config.map.build()
        K = self.config.map.order
        table = Table(
            name="iterate",
            columns=["n", "term", "degree", "coef_re", "coef_im", "oracle_error"],
        )
        worst = 0.0
        for n in range(1, self.config.iterate.n_max + 1):
            closed = iterate_closed(F, n, K)
            oracle = compose_iterates(F, n, K)
            for term, value, reference in (("a", closed.a, oracle.a), ("b", closed.b, oracle.b)):
                error = abs(value - reference)
                worst = max(worst, error / max(abs(reference), 1.0))
                table.add(n, term, 0, value.real, value.imag, error)
            for degree, (c, r) in enumerate(zip(closed.q.coeffs, oracle.q.coeffs)):
                error = abs(c - r)
                worst = max(worst, error / max(abs(r), 1.0))
                table.add(n, "q", degree, float(c.real), float(c.imag), float(error))
        self.logger.info("iterates_compared", n_max=self.config.iterate.n_max, worst=worst)
        return ExperimentResult(tables=[table], summary={"max_relative_oracle_error": worst})


class RenormExperiment(BaseExperiment):
    """Coefficients of ``psi_n`` in ``F^n o F_N^{-n} = (u, psi_n(u) + v)``."""

    def execute(self) -> ExperimentResult:
        F = self.config.map.build()
        N = self.config.truncation_degree()
        plan = plan_renormalization(F, N).require()
        result = ExperimentResult(summary={"N": N, "rate": plan.rate})
        self._record_hypotheses(result, (c.to_dict() for c in plan.checks))
        table = Table(name="renorm", columns=["n", "degree", "coef_re", "coef_im"])
        for n in self.config.scan.n_list:
            self._add_coefficients(table, psi_partial(F, N, n, self.config.map.order).coeffs, n)
        result.tables.append(table)
        return result


class LimitExperiment(BaseExperiment):
    """Coefficients of the entire limit ``psi``."""

    def execute(self) -> ExperimentResult:
        F = self.config.map.build()
        N = self.config.truncation_degree()
        plan = plan_renormalization(F, N).require()
        ranks = rank_comparison(F, N, K=self.config.map.order)
        result = ExperimentResult(
            summary={
                "N": N,
                "rate": plan.rate,
                "rank_iterates": ranks.n,
                "affine_rank": ranks.affine_rank,
                "polynomial_rank": ranks.polynomial_rank,
            }
        )
        self._record_hypotheses(result, (c.to_dict() for c in plan.checks))
        table = Table(name="limit", columns=["degree", "coef_re", "coef_im"])
        self._add_coefficients(table, limit_psi(F, N, self.config.map.order).coeffs)
        result.tables.append(table)
        return result


class ScanExperiment(BaseExperiment):
    """Sup error of the renormalized iterates against their limit."""

    def execute(self) -> ExperimentResult:
        F = self.config.map.build()
        N = self.config.truncation_degree()
        scan = self.config.scan
        plan = plan_renormalization(F, N).require()
        result = ExperimentResult()
        self._record_hypotheses(result, (c.to_dict() for c in plan.checks))
        rows = convergence_scan(F, N, scan.radius, scan.grid, scan.n_list, self.config.map.order)
        table = Table(name="scan", columns=["n", "sup_error"])
        for row in rows:
            table.add(row.n, row.sup_error)
        fitted = fit_decay_ratio([r.n for r in rows], [r.sup_error for r in rows])
        result.tables.append(table)
        result.summary = {"N": N, "rate": plan.rate, "fitted_ratio": fitted}
        self.logger.info("scan_finished", N=N, rate=plan.rate, fitted_ratio=fitted)
        return result


class CounterexampleExperiment(BaseExperiment):
    """Divergence of the linear renormalization of ``(alpha z, beta w + z^2)``."""

    def execute(self) -> ExperimentResult:
        alpha, beta = self.config.map.alpha, self.config.map.beta
        table = Table(name="counterexample", columns=["k", "coef_re", "coef_im", "abs", "ratio"])
        for row in counterexample_table(alpha, beta, self.config.counterexample.k_max):
            table.add(
                row.k, row.coefficient.real, row.coefficient.imag, row.modulus, row.ratio
            )
        limit = linear_renorm_limit(alpha, beta)
        summary = {
            "expected_ratio": abs(alpha) ** 2 / abs(beta),
            "linear_limit": None if limit is None else [limit.real, limit.imag],
        }
        if limit is None:
            self.logger.info("linear_renormalization_diverges", ratio=summary["expected_ratio"])
        return ExperimentResult(tables=[table], summary=summary)
