import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.dynamics.elementary import (
    ElementaryMap,
    PolyMap2,
    compose_iterates,
    convergence_scan,
    counterexample_table,
    fit_decay_ratio,
    foreword_map,
    inverse_iterate_closed,
    iterate_closed,
    limit_map,
    limit_psi,
    linear_renorm_coefficient,
    linear_renorm_limit,
    min_truncation_degree,
    plan_renormalization,
    psi_partial,
    renorm_compose,
    truncated_inverse,
)
from src.dynamics.sampling import disk_samples
from src.errors import DomainError, HypothesisViolation, PreconditionError
from src.series import CoefficientRule


def random_map(rng) -> ElementaryMap:
    """Elementary map with |alpha|, |beta| in (1, 3] and h of degree <= 8."""
    moduli = rng.uniform(1.01, 3.0, size=2)
    phases = rng.uniform(0, 2 * np.pi, size=2)
    alpha, beta = moduli * np.exp(1j * phases)
    degree = int(rng.integers(0, 9))
    coeffs = rng.normal(size=degree + 1) + 1j * rng.normal(size=degree + 1)
    return ElementaryMap.from_coefficients(alpha, beta, coeffs)


def test_closed_form_matches_composition(rng):
    """Closed-form iterates agree with repeated composition coefficient-wise."""
    for _ in range(20):
        F = random_map(rng)
        for n in range(1, 9):
            assert iterate_closed(F, n).allclose(compose_iterates(F, n), rtol=1e-10)


def test_iterate_zero_is_identity(quadratic_map):
    assert iterate_closed(quadratic_map, 0).allclose(PolyMap2.identity())


def test_negative_iterate_rejected(quadratic_map):
    with pytest.raises(DomainError):
        iterate_closed(quadratic_map, -1)


def test_closed_iterate_evaluates_like_the_map(quadratic_map):
    """F^3 agrees with applying F three times on sample points."""
    u = np.array([0.3, -0.2 + 0.1j])
    v = np.array([0.1j, 0.5])
    x, y = u, v
    for _ in range(3):
        x, y = quadratic_map(x, y)
    a, b = iterate_closed(quadratic_map, 3)(u, v)
    assert_allclose(a, x, rtol=1e-13)
    assert_allclose(b, y, rtol=1e-13)


def test_inverse_iterate_undoes_iterate():
    """F^{-n} o F^n is the identity."""
    F = ElementaryMap.from_coefficients(2.0, 3.0, [0.0, 1.0, 1.0])
    for n in (1, 3, 6):
        composite = inverse_iterate_closed(F, n).compose(iterate_closed(F, n))
        assert composite.allclose(PolyMap2.identity(), rtol=1e-9)


def test_inverse_of_non_invertible_map():
    with pytest.raises(DomainError):
        inverse_iterate_closed(ElementaryMap(2.0, 0.0), 1)


def test_truncated_inverse_uses_only_low_degrees():
    """F_N^{-n} never sees coefficients of degree >= N."""
    F = ElementaryMap.from_coefficients(2.0, 3.0, [0.0, 1.0, 1.0, 1.0])
    inv = truncated_inverse(F, 2, 4)
    assert np.all(inv.q.coeffs[2:] == 0)
    assert inv.a == pytest.approx(1 / 16)
    assert inv.b == pytest.approx(1 / 81)


def test_renorm_compose_matches_direct_composition():
    """(u, psi_n(u) + v) equals F^n o F_N^{-n}."""
    F = ElementaryMap.from_coefficients(2.0, 3.0, [0.0, 0.5, 1.0, 1.0])
    for n in (1, 4, 9):
        direct = iterate_closed(F, n).compose(truncated_inverse(F, 2, n))
        closed = renorm_compose(F, 2, n)
        assert closed.a == 1.0
        assert closed.allclose(direct, rtol=1e-10)


def test_psi_partial_of_quadratic(quadratic_map):
    """For h = u^2 and N = 2, psi_n(u) = (1 - (3/4)^n) u^2."""
    for n in (1, 5, 30):
        psi_n = psi_partial(quadratic_map, 2, n)
        assert psi_n[2] == pytest.approx(1 - 0.75**n, rel=1e-13)
        assert np.all(np.delete(psi_n.coeffs, 2) == 0)


def test_limit_psi(quadratic_map):
    """psi(u) = u^2 for (2u, 3v + u^2)."""
    psi = limit_psi(quadratic_map, 2)
    assert_allclose(psi.coeffs[:3], [0.0, 0.0, 1.0], atol=1e-12)
    assert np.all(psi.coeffs[3:] == 0)


def test_limit_psi_of_entire_h():
    """Coefficients eta_l / (alpha^l - beta) from degree N on."""
    F = ElementaryMap(2.0, 3.0, CoefficientRule.exponential())
    psi = limit_psi(F, 2, 10)
    for l in range(2, 11):
        expected = (1.0 / math.factorial(l)) / (2.0**l - 3.0)
        assert psi[l] == pytest.approx(expected, rel=1e-12)
    assert psi[0] == 0 and psi[1] == 0


def test_plan_records_each_hypothesis(quadratic_map):
    plan = plan_renormalization(quadratic_map, 2)
    assert plan.valid
    assert plan.rate == pytest.approx(0.75)
    assert [c.inequality for c in plan.checks] == [
        "|alpha| > 1",
        "|beta| > 1",
        "|beta| < |alpha|^N",
    ]


@pytest.mark.parametrize(
    "alpha,beta,N",
    [(0.9, 3.0, 2), (2.0, 1.0, 2), (2.0, 4.0, 2), (2.0, 5.0, 2), (2.0, 0.0, 2)],
)
def test_hypothesis_violations(alpha, beta, N):
    """Each failing inequality raises HypothesisViolation."""
    with pytest.raises(HypothesisViolation):
        plan_renormalization(ElementaryMap(alpha, beta), N).require()


@pytest.mark.parametrize("alpha,beta,expected", [(2, 3, 2), (2, 5, 3), (2, 4, 3), (3, 2, 1)])
def test_min_truncation_degree(alpha, beta, expected):
    assert min_truncation_degree(ElementaryMap(alpha, beta)) == expected


def test_convergence_scan_bound(quadratic_map):
    """sup_error(n) <= 5 (3/4)^n on the polydisk of radius 2."""
    rows = convergence_scan(quadratic_map, 2, 2.0, 21, [5, 10, 50, 100])
    for row in rows:
        assert row.sup_error <= 5 * 0.75**row.n
    assert rows[-1].sup_error <= 1e-10
    assert fit_decay_ratio([r.n for r in rows], [r.sup_error for r in rows]) == pytest.approx(
        0.75, rel=1e-3
    )


def test_convergence_scan_outside_disk_of_convergence():
    """Sampling past |alpha| times the radius of h is refused."""
    F = ElementaryMap(2.0, 3.0, CoefficientRule.geometric(1.0))
    with pytest.raises(PreconditionError):
        convergence_scan(F, 2, 2.5, 5, [5])


def test_fit_decay_ratio():
    ns = [5, 10, 15, 20]
    assert fit_decay_ratio(ns, [0.5**n for n in ns]) == pytest.approx(0.5)
    assert fit_decay_ratio([5], [0.1]) == 0.0


def test_counterexample_ratio():
    """|coef(k+1)| / |coef(k)| tends to |alpha|^2 / |beta| = 4/3."""
    rows = counterexample_table(2.0, 3.0, 50)
    for row in rows[39:50]:
        assert row.ratio == pytest.approx(4 / 3, rel=0.01)


def test_counterexample_control_case():
    """alpha = 1, beta = 2: the coefficient converges to 1."""
    assert abs(linear_renorm_coefficient(1.0, 2.0, 50)) == pytest.approx(1.0, rel=0.01)
    assert linear_renorm_limit(1.0, 2.0) == pytest.approx(1.0)


def test_linear_limit_only_when_beta_dominates():
    assert linear_renorm_limit(2.0, 3.0) is None
    assert linear_renorm_limit(2.0, 5.0) == pytest.approx(1.0)


def test_linear_renorm_coefficient_errors():
    with pytest.raises(DomainError):
        linear_renorm_coefficient(2.0, 0.0, 3)
    with pytest.raises(DomainError):
        linear_renorm_coefficient(2.0, 3.0, 0)


def test_foreword_map():
    F = foreword_map(2.0, 3.0)
    assert F.h.coefficient(2) == 1
    assert complex(F(0.5, 0.0)[1]) == pytest.approx(0.25)


@pytest.mark.parametrize("m,n", [(1, 1), (2, 3), (4, 1), (3, 4)])
def test_iterates_form_a_group(rng, m, n):
    """F^{m+n} = F^m o F^n and F^{-(m+n)} = F^{-m} o F^{-n}."""
    for _ in range(5):
        F = random_map(rng)
        forward = iterate_closed(F, m).compose(iterate_closed(F, n))
        assert iterate_closed(F, m + n).allclose(forward, rtol=1e-9)
        backward = inverse_iterate_closed(F, m).compose(inverse_iterate_closed(F, n))
        assert inverse_iterate_closed(F, m + n).allclose(backward, rtol=1e-9)


def test_consecutive_partial_sums_contract():
    """sup |psi_{n+1} - psi_n| <= C rate^n with C = sum_{l>=N} |eta_l| (r/|alpha|)^l."""
    F = ElementaryMap(2.0, 3.0, CoefficientRule.exponential())
    N, K, radius = 2, 32, 1.0
    C = sum(abs(F.h.coefficient(l)) * (radius / 2.0) ** l for l in range(N, K + 1))
    u = disk_samples(radius, 21)
    for n in range(1, 31):
        step = psi_partial(F, N, n + 1, K) - psi_partial(F, N, n, K)
        assert np.max(np.abs(step(u))) <= C * 0.75**n * (1 + 1e-9)


def test_limit_map_undoes_the_shear():
    """G o (u, v - psi(u)) is the identity."""
    F = ElementaryMap(2.0, 3.0, CoefficientRule.exponential())
    G = limit_map(F, 2)
    shear_back = PolyMap2(1.0, -limit_psi(F, 2), 1.0)
    assert G.compose(shear_back).allclose(PolyMap2.identity(), rtol=1e-14)
    u = np.array([0.3, -1.2 + 0.5j])
    v = np.array([1.0, 0.2j])
    x, y = G.compose(shear_back)(u, v)
    assert_allclose(x, u)
    assert_allclose(y, v, atol=1e-14)
