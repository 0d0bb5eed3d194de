import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.errors import DomainError, EvaluationError
from src.series import (
    CoefficientRule,
    Jet,
    add,
    arg_scale,
    compose,
    evaluate,
    mul,
    remainder,
    truncate,
)


def test_jet_constructors():
    """Zeros, constants and monomials have the requested order."""
    assert Jet.zeros(4).order == 4
    assert Jet.constant(3.0, 2)[0] == 3.0
    m = Jet.monomial(2, 5)
    assert m.degree == 2
    assert len(m) == 6
    assert Jet.zeros(3).degree == -1


def test_jet_is_immutable():
    """Coefficient vectors are read-only."""
    j = Jet([1.0, 2.0])
    with pytest.raises(ValueError):
        j.coeffs[0] = 5.0


def test_non_finite_coefficient_rejected():
    """NaN coefficients raise EvaluationError."""
    with pytest.raises(EvaluationError):
        Jet([1.0, math.nan])


def test_arithmetic_takes_the_smaller_order():
    """Binary operations truncate to the common order."""
    a = Jet([1.0, 1.0, 1.0, 1.0])
    b = Jet([1.0, 2.0])
    assert (a + b).order == 1
    assert_allclose((a + b).coeffs, [2.0, 3.0])
    assert_allclose(mul(Jet([1.0, 1.0, 0.0]), Jet([1.0, 1.0, 0.0])).coeffs, [1.0, 2.0, 1.0])


def test_truncate_and_tail_split_at_degree():
    """truncate keeps degrees below the bound, tail keeps the rest."""
    j = Jet([1.0, 2.0, 3.0, 4.0])
    assert_allclose(j.truncate(2).coeffs, [1.0, 2.0, 0.0, 0.0])
    assert_allclose(j.tail(2).coeffs, [0.0, 0.0, 3.0, 4.0])
    assert_allclose((j.truncate(2) + j.tail(2)).coeffs, j.coeffs)


def test_arg_scale():
    """arg_scale(c) gives the jet of u -> j(c u)."""
    assert_allclose(Jet([1.0, 1.0, 1.0]).arg_scale(2.0).coeffs, [1.0, 2.0, 4.0])


def test_derivative():
    assert_allclose(Jet([5.0, 1.0, 3.0]).derivative().coeffs, [1.0, 6.0])


def test_evaluation_matches_polyval():
    """Horner evaluation agrees with direct summation on arrays and scalars."""
    j = Jet([1.0, -2.0, 0.5j])
    z = np.array([0.0, 1.0, 0.3 + 0.2j])
    assert_allclose(j(z), 1.0 - 2.0 * z + 0.5j * z**2)
    assert isinstance(j(0.5), complex)


def test_compose_germs():
    """(u + u^2)^2 = u^2 + 2u^3 + u^4."""
    outer = Jet([0.0, 0.0, 1.0, 0.0, 0.0])
    inner = Jet([0.0, 1.0, 1.0, 0.0, 0.0])
    assert_allclose(compose(outer, inner).coeffs, [0.0, 0.0, 1.0, 2.0, 1.0])


def test_compose_requires_vanishing_inner():
    """A nonzero inner constant needs recentering."""
    outer = Jet([0.0, 0.0, 1.0])
    inner = Jet([1.0, 1.0, 0.0])
    with pytest.raises(DomainError):
        outer.compose(inner)
    assert_allclose(outer.compose(inner, recenter=True).coeffs, [1.0, 2.0, 1.0])


def test_truncate_rule_keeps_low_degrees():
    """truncate(exp, 3) = 1 + u + u^2/2 at the requested order."""
    t = truncate(CoefficientRule.exponential(), 3, 6)
    assert t.order == 6
    assert_allclose(t.coeffs, [1.0, 1.0, 0.5, 0.0, 0.0, 0.0, 0.0])


def test_remainder_starts_at_N():
    r = remainder(CoefficientRule.polynomial([1.0, 2.0, 3.0, 4.0]), 2, 5)
    assert_allclose(r.coeffs, [0.0, 0.0, 3.0, 4.0, 0.0, 0.0])


@pytest.mark.parametrize("N,K", [(0, 4), (3, 2)])
def test_remainder_rejects_bad_degrees(N, K):
    with pytest.raises(DomainError):
        remainder(CoefficientRule.exponential(), N, K)


def test_jet_cannot_invent_coefficients():
    """Asking a jet for degrees beyond its order is an error."""
    with pytest.raises(DomainError):
        remainder(Jet([1.0, 1.0]), 1, 4)


def test_rules():
    """Closed-form coefficient rules and their radii."""
    assert CoefficientRule.exponential().coefficient(3) == pytest.approx(1 / 6)
    geometric = CoefficientRule.geometric(0.5)
    assert geometric.radius == pytest.approx(2.0)
    assert geometric.coefficient(4) == pytest.approx(0.0625)
    assert CoefficientRule.polynomial([0, 0, 1]).degree == 2
    assert CoefficientRule.zero().coefficient(7) == 0


def test_named_rule():
    assert CoefficientRule.named("monomial", degree=3).coefficient(3) == 1
    with pytest.raises(DomainError):
        CoefficientRule.named("bessel")


@pytest.mark.parametrize("degree", [2.5, -1, 1 + 1j])
def test_named_monomial_rejects_bad_degree(degree):
    with pytest.raises(DomainError):
        CoefficientRule.named("monomial", degree=degree)


def test_named_monomial_accepts_complex_integer_degree():
    """Config values arrive as complex numbers."""
    assert CoefficientRule.named("monomial", degree=3 + 0j).degree == 3


def test_truncate_pads_a_low_order_jet():
    """A jet of order 3 determines P_6: the missing degrees are zero."""
    t = truncate(Jet.from_polynomial([0.0, 1.0, 0.0, 2.0]), 6)
    assert t.order == 5
    assert_allclose(t.coeffs, [0.0, 1.0, 0.0, 2.0, 0.0, 0.0])


def test_with_order_cuts_and_pads():
    j = Jet([1.0, 2.0, 3.0])
    assert_allclose(j.with_order(1).coeffs, [1.0, 2.0])
    assert_allclose(j.with_order(4).coeffs, [1.0, 2.0, 3.0, 0.0, 0.0])


def random_jet(rng, order=8, vanish=False):
    coeffs = rng.normal(size=order + 1) + 1j * rng.normal(size=order + 1)
    if vanish:
        coeffs[0] = 0.0
    return Jet(coeffs)


def test_ring_axioms(rng):
    """Addition and multiplication are associative and distribute."""
    for _ in range(10):
        a, b, c = (random_jet(rng) for _ in range(3))
        assert add(add(a, b), c).allclose(add(a, add(b, c)))
        assert add(a, b).allclose(add(b, a))
        assert mul(mul(a, b), c).allclose(mul(a, mul(b, c)), rtol=1e-11)
        assert mul(a, b).allclose(mul(b, a))
        assert mul(a, add(b, c)).allclose(add(mul(a, b), mul(a, c)), rtol=1e-11)


def test_composition_axioms(rng):
    """Germ composition is associative, left-distributive and multiplicative."""
    for _ in range(10):
        f, g = random_jet(rng), random_jet(rng)
        p, q = random_jet(rng, vanish=True), random_jet(rng, vanish=True)
        assert compose(compose(f, p), q).allclose(compose(f, compose(p, q)), rtol=1e-10)
        assert compose(add(f, g), p).allclose(add(compose(f, p), compose(g, p)), rtol=1e-10)
        assert compose(mul(f, g), p).allclose(mul(compose(f, p), compose(g, p)), rtol=1e-10)


def test_arg_scale_is_multiplicative(rng):
    h = random_jet(rng)
    for a, b in [(0.7 + 0.2j, -1.3), (2.0, 0.5j), (1.1, 1.1)]:
        assert arg_scale(arg_scale(h, a), b).allclose(arg_scale(h, a * b))


def test_evaluate_commutes_with_compose(rng):
    """For cubic f and g the order-9 composition is exact, so values agree."""
    for _ in range(10):
        f = Jet.from_polynomial(rng.normal(size=4) + 1j * rng.normal(size=4), 9)
        inner = rng.normal(size=4) + 1j * rng.normal(size=4)
        inner[0] = 0.0
        g = Jet.from_polynomial(inner, 9)
        z = rng.uniform(-0.7, 0.7, 16) + 1j * rng.uniform(-0.7, 0.7, 16)
        expected = evaluate(f, evaluate(g, z))
        assert_allclose(evaluate(compose(f, g), z), expected, rtol=1e-10, atol=1e-10)


@pytest.mark.parametrize(
    "rule",
    [
        CoefficientRule.exponential(0.8 - 0.3j),
        CoefficientRule.geometric(0.6j),
        CoefficientRule.from_jet(Jet([0.5, -1.0, 2.0, 0.25j, 1.5]), radius=3.0),
        CoefficientRule.polynomial([1.0, 2.0, 3.0]),
    ],
)
@pytest.mark.parametrize("N", [1, 2, 5])
def test_truncate_plus_remainder_rebuilds_the_rule(rule, N):
    K = 12
    rebuilt = truncate(rule, N, K) + remainder(rule, N, K)
    assert_allclose(rebuilt.coeffs, rule.jet(K).coeffs, rtol=0, atol=0)
