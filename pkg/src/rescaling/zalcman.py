"""Fubini-Study derivatives, the metric-space lemma and Zalcman rescaling.

Families are sampled on a finite grid of a polydisk, so every quantifier
of the rescaling argument becomes an exhaustive check over the sample.
Points are complex arrays of shape ``(m, d)`` with ``d`` in ``{1, 2}``.
"""
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
import structlog

from ..dynamics.elementary import ElementaryMap, PolyMap2, iterate_closed, limit_map
from ..dynamics.sampling import disk_samples
from ..errors import (
    DomainError,
    EvaluationError,
    MissingIndexError,
    NormalFamilyError,
    PreconditionError,
    SearchFailure,
    VerificationFailure,
)
from ..series import DEFAULT_ORDER, Jet

logger = structlog.get_logger(__name__)

DEFAULT_GRID = 41
DIFFERENCE_STEP = 1e-6
BOUND = 2.0
RANK_TOLERANCE = 1e-4
RANK_ITERATES = 30

PointMap = Callable[[np.ndarray], np.ndarray]


def _as_points(points, dimension: int) -> np.ndarray:
    arr = np.asarray(points, dtype=np.complex128)
    if dimension == 1 and arr.ndim <= 1:
        return arr.reshape(-1, 1)
    if arr.ndim == 1:
        return arr.reshape(1, -1)
    return arr


def euclidean(point: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Distances from ``point`` (shape ``(d,)``) to each row of ``points``."""
    return np.sqrt(np.sum(np.abs(points - point) ** 2, axis=-1))


@dataclass(frozen=True)
class Polydisk:
    """Product of disks, one center and radius per coordinate."""

    center: Tuple[complex, ...]
    radius: Tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.center) != len(self.radius) or len(self.center) not in (1, 2):
            raise DomainError("polydisk needs one radius per coordinate in dimension 1 or 2")
        if any(not r > 0 for r in self.radius):
            raise DomainError(f"polydisk radii must be positive, got {self.radius}")

    @classmethod
    def disk(cls, center: complex = 0.0, radius: float = 1.0) -> "Polydisk":
        return cls((complex(center),), (float(radius),))

    @property
    def dimension(self) -> int:
        return len(self.center)

    def contains(self, points) -> np.ndarray:
        pts = _as_points(points, self.dimension)
        offsets = np.abs(pts - np.asarray(self.center))
        return np.all(offsets <= np.asarray(self.radius) * (1 + 1e-12), axis=-1)

    def sample(self, grid: int = DEFAULT_GRID) -> np.ndarray:
        disks = [disk_samples(r, grid, c) for c, r in zip(self.center, self.radius)]
        if self.dimension == 1:
            return disks[0].reshape(-1, 1)
        z, w = np.meshgrid(disks[0], disks[1], indexing="ij")
        return np.stack([z.ravel(), w.ravel()], axis=-1)


def ball_sample(dimension: int, radius: float, grid: int = DEFAULT_GRID) -> np.ndarray:
    """Lattice points of the closed Euclidean ball ``|w| <= radius`` about 0."""
    cube = Polydisk(tuple([0j] * dimension), tuple([radius] * dimension)).sample(grid)
    norms = euclidean(np.zeros(dimension, dtype=np.complex128), cube)
    return cube[norms <= radius * (1 + 1e-12)]


@dataclass(frozen=True)
class FamilyMember:
    """A single holomorphic map ``C^d -> C^d`` with its derivative."""

    evaluate: PointMap
    jacobian: Optional[PointMap] = None
    step: float = DIFFERENCE_STEP

    def values(self, points: np.ndarray) -> np.ndarray:
        values = np.asarray(self.evaluate(points), dtype=np.complex128)
        if not np.all(np.isfinite(values)):
            raise EvaluationError("non-finite family evaluation")
        return values

    def derivatives(self, points: np.ndarray) -> np.ndarray:
        """Jacobians, shape ``(m, d_out, d_in)``; central differences without an analytic one."""
        if self.jacobian is not None:
            jac = np.asarray(self.jacobian(points), dtype=np.complex128)
        else:
            columns = []
            for i in range(points.shape[1]):
                shift = np.zeros(points.shape[1], dtype=np.complex128)
                shift[i] = self.step
                forward = self.values(points + shift)
                backward = self.values(points - shift)
                columns.append((forward - backward) / (2 * self.step))
            jac = np.stack(columns, axis=-1)
        if not np.all(np.isfinite(jac)):
            raise EvaluationError("non-finite family derivative")
        return jac


@dataclass(frozen=True)
class SampledFamily:
    """Indexed family ``n -> f_n`` on a polydisk."""

    evaluator: Callable[[int, np.ndarray], np.ndarray]
    domain: Polydisk
    jacobian: Optional[Callable[[int, np.ndarray], np.ndarray]] = None
    step: Optional[float] = None

    def __post_init__(self) -> None:
        if self.step is not None and not self.step > 0:
            raise DomainError(f"difference step must be positive, got {self.step}")

    @property
    def analytic(self) -> bool:
        return self.jacobian is not None

    @property
    def difference_step(self) -> float:
        return self.step if self.step is not None else DIFFERENCE_STEP * max(self.domain.radius)

    def member(self, n: int) -> FamilyMember:
        jacobian = None
        if self.jacobian is not None:
            jacobian = lambda points: self.jacobian(n, points)  # noqa: E731
        return FamilyMember(
            lambda points: self.evaluator(n, points), jacobian, self.difference_step
        )

    @classmethod
    def scalar(
        cls,
        f: Callable[[int, np.ndarray], np.ndarray],
        domain: Polydisk,
        df: Optional[Callable[[int, np.ndarray], np.ndarray]] = None,
    ) -> "SampledFamily":
        """Wrap a one-variable family acting on complex vectors."""
        jacobian = None
        if df is not None:
            jacobian = lambda n, pts: np.asarray(df(n, pts[:, 0]))[:, None, None]  # noqa: E731
        return cls(lambda n, pts: np.asarray(f(n, pts[:, 0]))[:, None], domain, jacobian)

    @classmethod
    def from_polymaps(
        cls, factory: Callable[[int], PolyMap2], domain: Polydisk
    ) -> "SampledFamily":
        """Family of triangular maps with exact (jet) Jacobians."""

        def evaluator(n: int, pts: np.ndarray) -> np.ndarray:
            u, v = factory(n)(pts[:, 0], pts[:, 1])
            return np.stack([u, v], axis=-1)

        def jacobian(n: int, pts: np.ndarray) -> np.ndarray:
            return factory(n).jacobian(pts[:, 0], pts[:, 1])

        return cls(evaluator, domain, jacobian)


def spherical_derivative(value, derivative) -> np.ndarray:
    """``|f'| / (1 + |f|^2)``."""
    value = np.asarray(value)
    return np.abs(derivative) / (1.0 + np.abs(value) ** 2)


def fs_derivative(member: FamilyMember, points) -> np.ndarray:
    """Fubini-Study norm of the differential in the affine chart.

    For each coordinate direction ``i`` the norm is
    ``sqrt((1+|h|^2)|d_i h|^2 - |<h, d_i h>|^2) / (1+|h|^2)``; the maximum
    over directions is returned per point.

    Args:
        member (FamilyMember): The map
        points: Complex points, shape ``(m, d)`` (or ``(m,)`` when ``d = 1``)

    Returns:
        np.ndarray: Non-negative reals, one per point
    """
    pts = np.asarray(points, dtype=np.complex128)
    if pts.ndim <= 1:
        pts = pts.reshape(-1, 1)
    values = member.values(pts)
    jac = member.derivatives(pts)
    norm2 = 1.0 + np.sum(np.abs(values) ** 2, axis=-1)
    column2 = np.sum(np.abs(jac) ** 2, axis=1)
    inner = np.abs(np.einsum("mj,mji->mi", np.conj(values), jac)) ** 2
    radicand = np.maximum(norm2[:, None] * column2 - inner, 0.0)
    return np.max(np.sqrt(radicand), axis=-1) / norm2


@dataclass(frozen=True, eq=False)
class MetricField:
    """Finite sample of a metric space with a non-negative function ``M``."""

    points: np.ndarray
    values: np.ndarray
    distance: Callable[[np.ndarray, np.ndarray], np.ndarray] = euclidean

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size != len(self.points):
            raise DomainError("one value of M per sample point is required")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise DomainError("M must be finite and non-negative on every sample point")
        object.__setattr__(self, "values", values)

    def distances_from(self, index: int) -> np.ndarray:
        return self.distance(self.points[index], self.points)

    def check_metric_axioms(
        self, rng: np.random.Generator, triples: int = 64, tol: float = 1e-12
    ) -> None:
        """Check symmetry, identity and the triangle inequality on random triples."""
        size = len(self.points)
        for i, j, k in rng.integers(0, size, size=(triples, 3)):
            dij = float(self.distance(self.points[i], self.points[j : j + 1])[0])
            dji = float(self.distance(self.points[j], self.points[i : i + 1])[0])
            dik = float(self.distance(self.points[i], self.points[k : k + 1])[0])
            dkj = float(self.distance(self.points[k], self.points[j : j + 1])[0])
            dii = float(self.distance(self.points[i], self.points[i : i + 1])[0])
            scale = tol * max(1.0, dij, dik, dkj)
            if dii > scale or abs(dij - dji) > scale or dij > dik + dkj + scale:
                raise VerificationFailure(
                    "distance violates the metric axioms",
                    {"triple": [int(i), int(j), int(k)]},
                )


@dataclass(frozen=True)
class LemmaCertificate:
    """Exhaustively checked postconditions of the metric-space lemma."""

    u: int
    v: int
    sigma: float
    distance: float
    distance_bound: float
    ball_radius: float
    ball_max: float
    steps: int = 0


def verify_lemma_postconditions(
    field_: MetricField, u: int, v: int, sigma: float, steps: int = 0
) -> LemmaCertificate:
    """Check (i) ``d(u,v) <= 2/(sigma M(u))``, (ii) ``M(v) >= M(u)`` and
    (iii) ``d(x,v) <= 1/(sigma M(v)) => M(x) <= 2 M(v)`` over the sample."""
    M = field_.values
    distance = float(field_.distances_from(u)[v])
    bound = 2.0 / (sigma * M[u])
    radius = 1.0 / (sigma * M[v])
    ball = field_.distances_from(v) <= radius
    ball_max = float(np.max(M[ball]))
    certificate = LemmaCertificate(u, v, sigma, distance, bound, radius, ball_max, steps)
    if distance > bound * (1 + 1e-12):
        raise VerificationFailure("lemma postcondition (i) failed", certificate.__dict__)
    if M[v] < M[u]:
        raise VerificationFailure("lemma postcondition (ii) failed", certificate.__dict__)
    if ball_max > 2.0 * M[v]:
        raise VerificationFailure("lemma postcondition (iii) failed", certificate.__dict__)
    return certificate


def metric_lemma_search(field_: MetricField, u: int, sigma: float) -> int:
    """Index of a point ``v`` satisfying the metric-space lemma from ``u``.

    Starting at ``u``, the center moves to the largest violator of (iii)
    in its ball; ``M`` at least doubles each move, so the loop stops after
    at most ``log2(max M / M(u)) + 1`` moves on a finite sample.
    """
    M = field_.values
    if not M[u] > 0:
        raise PreconditionError("metric lemma needs M(u) > 0", {"u": int(u)})
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    max_steps = int(math.ceil(math.log2(float(np.max(M)) / M[u]))) + 1
    v, trace = int(u), [int(u)]
    for _ in range(max_steps + 1):
        ball = field_.distances_from(v) <= 1.0 / (sigma * M[v])
        violators = np.flatnonzero(ball & (M > 2.0 * M[v]))
        if violators.size == 0:
            verify_lemma_postconditions(field_, int(u), v, sigma, len(trace) - 1)
            return v
        v = int(violators[np.argmax(M[violators])])
        trace.append(v)
    raise SearchFailure("metric lemma search did not terminate", trace)


@dataclass(frozen=True)
class RescalingEntry:
    """One extracted triple ``(n, v_n, r_n)`` plus its certificates."""

    n: int
    step: int
    center: Tuple[complex, ...]
    scale: float
    seed_point: Tuple[complex, ...]
    deriv0: float
    bound: float
    slack: float


@dataclass(frozen=True)
class RescalingSequence:
    entries: Tuple[RescalingEntry, ...] = field(default_factory=tuple)

    def entry(self, n: int) -> RescalingEntry:
        for entry in self.entries:
            if entry.n == n:
                return entry
        raise MissingIndexError(f"index {n} is not part of the rescaling sequence")

    @property
    def indices(self) -> List[int]:
        return [entry.n for entry in self.entries]


def rescaled_member(member: FamilyMember, center: np.ndarray, scale: float) -> FamilyMember:
    """``w -> f(center + scale * w)``."""
    center = np.asarray(center, dtype=np.complex128)
    jacobian = None
    if member.jacobian is not None:
        jacobian = lambda w: scale * member.jacobian(center + scale * w)  # noqa: E731
    return FamilyMember(
        lambda w: member.evaluate(center + scale * w), jacobian, member.step / scale
    )


def square_threshold(step: int) -> float:
    return float(step * step)


def zalcman_extract(
    family: SampledFamily,
    v,
    count: int,
    threshold: Callable[[int], float] = square_threshold,
    max_index: Optional[int] = None,
    grid: int = DEFAULT_GRID,
) -> RescalingSequence:
    """Extract a rescaling sequence ``(n, v_n, r_n)`` at ``v``.

    Step ``j`` picks the next family index whose sampled Fubini-Study
    derivative reaches ``threshold(j)``, seeds the metric-space lemma with
    the qualifying sample point closest to ``v`` and ``sigma = 1/j``, and
    sets ``r_n = 1 / M_n(v_n)``.

    Args:
        family (SampledFamily): The family
        v: Point of non-normality
        count (int): Number of entries to extract
        threshold (Callable[[int], float]): Derivative level per step
        max_index (Optional[int]): Largest family index tried
        grid (int): Lattice points per real axis of the sample

    Returns:
        RescalingSequence: The extracted entries
    """
    if count < 1:
        raise DomainError(f"count must be positive, got {count}")
    max_index = max_index or 4 * count * count
    dimension = family.domain.dimension
    sample = family.domain.sample(grid)
    target = _as_points(v, dimension)[0]
    to_target = euclidean(target, sample)
    entries, sups = [], []
    index = 0
    for step in range(1, count + 1):
        level = threshold(step)
        hits = np.empty(0, dtype=int)
        while hits.size == 0:
            index += 1
            if index > max_index:
                logger.warning("derivative_growth_missing", step=step, level=level)
                raise NormalFamilyError(
                    "no derivative growth detected; the family looks normal on the sample",
                    {"level": level, "sups": sups[-20:], "max_index": max_index},
                )
            member = family.member(index)
            M = fs_derivative(member, sample)
            sups.append([index, float(np.max(M))])
            hits = np.flatnonzero(M >= level)
        seed = int(hits[np.argmin(to_target[hits])])
        v_index = metric_lemma_search(MetricField(sample, M), seed, 1.0 / step)
        scale = 1.0 / M[v_index]
        rescaled = rescaled_member(member, sample[v_index], scale)
        deriv0 = float(fs_derivative(rescaled, np.zeros((1, dimension)))[0])
        ball = ball_sample(dimension, float(step), grid)
        bound = float(np.max(fs_derivative(rescaled, ball)))
        entries.append(
            RescalingEntry(
                n=index,
                step=step,
                center=tuple(complex(c) for c in sample[v_index]),
                scale=float(scale),
                seed_point=tuple(complex(c) for c in sample[seed]),
                deriv0=deriv0,
                bound=bound,
                slack=max(0.0, bound - BOUND),
            )
        )
        logger.debug("rescaling_entry", n=index, step=step, scale=float(scale), deriv0=deriv0)
    return RescalingSequence(tuple(entries))


def rescaled_eval(family: SampledFamily, seq: RescalingSequence, n: int, w) -> np.ndarray:
    """``f_n(v_n + r_n w)``."""
    entry = seq.entry(n)
    points = _as_points(w, family.domain.dimension)
    return family.member(n).values(np.asarray(entry.center) + entry.scale * points)


@dataclass(frozen=True)
class DivergenceWitness:
    values: Tuple[Tuple[int, float], ...]
    crossing: Optional[int]


def divergence_witness(
    F: ElementaryMap, n_max: int = 30, threshold: float = 1e6, K: int = DEFAULT_ORDER
) -> DivergenceWitness:
    """Fubini-Study derivative of ``F^n`` at 0 for ``n = 1..n_max``.

    Raises ``NormalFamilyError`` when it never exceeds ``threshold``.
    """
    domain = Polydisk((0j, 0j), (1.0, 1.0))
    family = SampledFamily.from_polymaps(lambda n: iterate_closed(F, n, K), domain)
    origin = np.zeros((1, 2), dtype=np.complex128)
    values, crossing = [], None
    for n in range(1, n_max + 1):
        value = float(fs_derivative(family.member(n), origin)[0])
        values.append((n, value))
        if value > threshold and crossing is None:
            crossing = n
    if crossing is None:
        raise NormalFamilyError(
            "derivative at 0 stays bounded", {"threshold": threshold, "values": values}
        )
    return DivergenceWitness(tuple(values), crossing)


def image_rank(member: FamilyMember, points, tol: float = RANK_TOLERANCE) -> int:
    """Generic rank of the differential over the sample.

    A singular value counts when it exceeds ``tol`` times the largest one at
    the same point; the maximum over the points is returned.
    """
    pts = np.asarray(points, dtype=np.complex128)
    if pts.ndim <= 1:
        pts = pts.reshape(-1, 1)
    singular = np.linalg.svd(member.derivatives(pts), compute_uv=False)
    ranks = np.sum(singular > tol * singular[:, :1], axis=-1)
    return int(np.max(ranks, initial=0))


def _polymap_member(G: PolyMap2) -> FamilyMember:
    return FamilyMember(
        lambda pts: np.stack(G(pts[:, 0], pts[:, 1]), axis=-1),
        lambda pts: G.jacobian(pts[:, 0], pts[:, 1]),
    )


def affine_rescaling(F: ElementaryMap, n: int, K: int = DEFAULT_ORDER) -> Tuple[float, PolyMap2]:
    """``r_n`` and ``w -> F^n(r_n w)`` with ``r_n`` the reciprocal Fubini-Study derivative at 0.

    The rescaled iterate is assembled term by term so that no coefficient
    of ``F^n`` itself is ever formed.
    """
    if n < 1:
        raise DomainError(f"iterate count must be positive, got {n}")
    h = F.h_jet(K)
    slope = sum(F.beta**k * F.alpha ** (n - 1 - k) for k in range(n)) * h[1]
    jac = np.array([[F.alpha**n, 0.0], [slope, F.beta**n]], dtype=np.complex128)
    if not np.all(np.isfinite(jac)):
        raise EvaluationError("iterate derivative overflows at the origin", {"n": n})
    # F^n(0) = 0 up to the constant term, so the norm is the largest column
    scale = 1.0 / float(np.max(np.linalg.norm(jac, axis=0)))
    q = Jet.zeros(K)
    for k in range(n):
        q = q + h.arg_scale(F.alpha ** (n - 1 - k) * scale).scale(F.beta**k)
    return scale, PolyMap2(F.alpha**n * scale, q, F.beta**n * scale)


@dataclass(frozen=True)
class RankComparison:
    n: int
    scale: float
    affine_rank: int
    polynomial_rank: int


def rank_comparison(
    F: ElementaryMap,
    N: int,
    n: int = RANK_ITERATES,
    radius: float = 0.5,
    grid: int = 11,
    K: int = DEFAULT_ORDER,
    tol: float = RANK_TOLERANCE,
) -> RankComparison:
    """Image dimension of the affine rescaling of ``F^n`` against the polynomial limit.

    The polynomial limit ``(u, psi(u) + v)`` has Jacobian determinant 1, so
    it keeps rank 2; the affine rescaling collapses a direction unless
    ``|alpha| = |beta|``.
    """
    points = Polydisk((0j, 0j), (radius, radius)).sample(grid)
    scale, rescaled = affine_rescaling(F, n, K)
    comparison = RankComparison(
        n=n,
        scale=scale,
        affine_rank=image_rank(_polymap_member(rescaled), points, tol),
        polynomial_rank=image_rank(_polymap_member(limit_map(F, N, K)), points, tol),
    )
    logger.debug("rank_comparison", **comparison.__dict__)
    return comparison
