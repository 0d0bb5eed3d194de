import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.dynamics.elementary import ElementaryMap, PolyMap2, foreword_map, iterate_closed
from src.errors import (
    DomainError,
    MissingIndexError,
    NormalFamilyError,
    PreconditionError,
    VerificationFailure,
)
from src.rescaling import (
    FamilyMember,
    MetricField,
    Polydisk,
    SampledFamily,
    affine_rescaling,
    ball_sample,
    divergence_witness,
    fs_derivative,
    image_rank,
    metric_lemma_search,
    rank_comparison,
    rescaled_eval,
    zalcman_extract,
)
from src.series import CoefficientRule, Jet


@pytest.fixture
def linear_family():
    """f_n(z) = n z on the unit disk."""
    return SampledFamily.scalar(
        lambda n, z: n * z,
        Polydisk.disk(0.0, 1.0),
        lambda n, z: np.full(z.shape, float(n), dtype=np.complex128),
    )


def test_fs_derivative_of_scalar_map():
    """For one variable it reduces to |f'| / (1 + |f|^2)."""
    member = FamilyMember(lambda pts: pts, lambda pts: np.ones((len(pts), 1, 1)))
    assert_allclose(fs_derivative(member, np.array([0.0, 1.0, 2.0j])), [1.0, 0.5, 0.2])


def test_fs_derivative_by_differences_matches_analytic():
    """Central differences agree with the exact derivative."""
    exact = FamilyMember(lambda pts: pts**2, lambda pts: (2 * pts)[:, :, None])
    approx = FamilyMember(lambda pts: pts**2)
    points = np.array([0.1, 0.3 + 0.2j, -0.5j])
    assert_allclose(fs_derivative(approx, points), fs_derivative(exact, points), rtol=1e-6)


def test_fs_derivative_of_diagonal_map():
    """The larger multiplier wins at a fixed point."""
    member = FamilyMember(
        lambda pts: pts * np.array([2.0, 5.0]),
        lambda pts: np.broadcast_to(np.diag([2.0, 5.0]), (len(pts), 2, 2)),
    )
    assert fs_derivative(member, np.zeros((1, 2)))[0] == pytest.approx(5.0)


def test_polydisk_rejects_bad_radius():
    with pytest.raises(DomainError):
        Polydisk((0j,), (0.0,))
    with pytest.raises(DomainError):
        Polydisk((0j, 0j), (1.0,))


def test_polydisk_sample_stays_inside():
    disk = Polydisk((0j, 1j), (1.0, 0.5))
    points = disk.sample(7)
    assert points.shape[1] == 2
    assert np.all(disk.contains(points))


def test_metric_axioms_hold_for_euclidean(rng):
    points = Polydisk.disk().sample(11)
    MetricField(points, np.zeros(len(points))).check_metric_axioms(rng, triples=200)


def test_metric_axioms_catch_squared_distance(rng):
    """Squared distance breaks the triangle inequality on 0, 1, 2."""
    points = np.array([[0.0], [1.0], [2.0]], dtype=np.complex128)

    def squared(point, others):
        return np.sum(np.abs(others - point) ** 2, axis=-1)

    field = MetricField(points, np.zeros(3), squared)
    with pytest.raises(VerificationFailure):
        field.check_metric_axioms(rng, triples=500)


def test_metric_field_rejects_negative_values():
    with pytest.raises(DomainError):
        MetricField(np.zeros((2, 1)), np.array([1.0, -1.0]))


def test_metric_lemma_moves_to_larger_value():
    """The search leaves u when its ball holds a value above 2 M(u)."""
    points = np.arange(11, dtype=np.complex128).reshape(-1, 1)
    values = np.ones(11)
    values[3] = 5.0
    field = MetricField(points, values)
    assert metric_lemma_search(field, 0, 0.25) == 3
    assert metric_lemma_search(field, 0, 1.0) == 0


def test_metric_lemma_needs_positive_value():
    field = MetricField(np.zeros((2, 1)), np.array([0.0, 1.0]))
    with pytest.raises(PreconditionError):
        metric_lemma_search(field, 0, 1.0)


def test_zalcman_linear_family(linear_family):
    """For f_n = n z: v_n = 0, n r_n = 1 and derivative 1 at the origin."""
    sequence = zalcman_extract(linear_family, 0.0, 50)
    assert len(sequence.entries) == 50
    assert sequence.indices == [j * j for j in range(1, 51)]
    for entry in sequence.entries:
        assert abs(entry.center[0]) <= 0.05
        assert entry.n * entry.scale == pytest.approx(1.0, rel=1e-12)
        assert entry.deriv0 == pytest.approx(1.0, abs=1e-9)
        assert entry.slack == 0.0


def test_rescaled_eval(linear_family):
    sequence = zalcman_extract(linear_family, 0.0, 3)
    assert_allclose(rescaled_eval(linear_family, sequence, 4, [1.0, 0.5j]).ravel(), [1.0, 0.5j])
    with pytest.raises(MissingIndexError):
        rescaled_eval(linear_family, sequence, 5, [0.0])


def test_zalcman_normal_family_detected():
    """z^n on |z| <= 1/2 never reaches derivative 4."""
    family = SampledFamily.scalar(
        lambda n, z: z**n, Polydisk.disk(0.0, 0.5), lambda n, z: n * z ** (n - 1)
    )
    with pytest.raises(NormalFamilyError):
        zalcman_extract(family, 0.0, 2)


def test_zalcman_rejects_empty_request(linear_family):
    with pytest.raises(DomainError):
        zalcman_extract(linear_family, 0.0, 0)


def test_divergence_witness(quadratic_map):
    """|F^n'(0)| = 3^n first exceeds 1e6 at n = 13."""
    witness = divergence_witness(quadratic_map, 20, 1e6)
    assert witness.crossing == 13
    assert witness.values[11][1] == pytest.approx(3.0**12)


def test_divergence_witness_for_contraction():
    with pytest.raises(NormalFamilyError):
        divergence_witness(ElementaryMap(0.5, 0.5), 20, 1e6)


def test_zalcman_power_family_near_unit_circle():
    """For z^n about 1 the spherical derivative peaks near n/2, so n r_n stays bounded."""
    family = SampledFamily.scalar(
        lambda n, z: z**n, Polydisk.disk(1.0, 0.5), lambda n, z: n * z ** (n - 1)
    )
    sequence = zalcman_extract(family, 1.0, 5)
    in_range = [e for e in sequence.entries if 10 <= e.n <= 60]
    assert len(in_range) >= 2
    for entry in in_range:
        assert 0.2 <= entry.n * entry.scale <= 5.0
        assert entry.deriv0 == pytest.approx(1.0, rel=1e-9)


def test_ball_sample_is_euclidean():
    """Corners of the bidisk lie outside the ball of the same radius."""
    ball = ball_sample(2, 3.0, 9)
    norms = np.sqrt(np.sum(np.abs(ball) ** 2, axis=-1))
    assert np.all(norms <= 3.0 * (1 + 1e-12))
    assert len(ball) < len(Polydisk((0j, 0j), (3.0, 3.0)).sample(9))
    assert np.any(np.all(ball == 0, axis=-1))


def test_ball_sample_in_one_variable_is_the_disk():
    assert_allclose(ball_sample(1, 2.0, 11), Polydisk.disk(0.0, 2.0).sample(11))


def test_image_rank_of_constant_and_degenerate_maps():
    points = Polydisk((0j, 0j), (1.0, 1.0)).sample(5)
    zero = FamilyMember(lambda pts: np.zeros_like(pts), lambda pts: np.zeros((len(pts), 2, 2)))
    collapse = FamilyMember(
        lambda pts: np.stack([pts[:, 0] + pts[:, 1], pts[:, 0] + pts[:, 1]], axis=-1)
    )
    assert image_rank(zero, points) == 0
    assert image_rank(collapse, points) == 1
    assert image_rank(FamilyMember(lambda pts: pts), points) == 2


def test_affine_rescaling_matches_rescaled_iterate():
    F = foreword_map(2.0, 3.0)
    scale, rescaled = affine_rescaling(F, 5, 8)
    assert scale == pytest.approx(3.0**-5)
    direct = iterate_closed(F, 5, 8).compose(PolyMap2(scale, Jet.zeros(8), scale))
    assert rescaled.a == pytest.approx(direct.a)
    assert rescaled.b == pytest.approx(direct.b)
    assert_allclose(rescaled.q.coeffs, direct.q.coeffs, rtol=1e-12, atol=1e-15)


def test_affine_rescaling_needs_positive_count():
    with pytest.raises(DomainError):
        affine_rescaling(foreword_map(2.0, 3.0), 0)


def test_affine_limit_loses_a_dimension():
    """(2z, 5w + z^2): the affine rescaling has rank 1, the polynomial limit rank 2."""
    comparison = rank_comparison(foreword_map(2.0, 5.0), 3)
    assert comparison.affine_rank == 1
    assert comparison.polynomial_rank == 2


def test_affine_limit_keeps_rank_for_equal_moduli():
    comparison = rank_comparison(ElementaryMap(2.0, 2.0, CoefficientRule.monomial(2)), 2)
    assert comparison.affine_rank == 2
    assert comparison.polynomial_rank == 2
