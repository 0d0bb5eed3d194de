"""Conjugation on the repelling basin of an automorphism of C^2.

For an automorphism ``H`` with a repulsive fixed point ``p`` the basin of
``p`` for ``H^{-1}`` carries a biholomorphic ``Psi`` with
``Psi o H = Lambda o Psi``. It is approximated by

    Psi_n(x) = Lambda^n P(E^{-1}(H^{-n}(x) - p))

where ``E`` diagonalizes ``DH(p)`` and ``P`` is the tangent-to-identity
polynomial solving the homological equations up to degree ``m``. The
residual ``|Psi_n o H - Lambda Psi_n|`` then decays like
``(|lambda_2| / |lambda_1|^{m+1})^n``. With ``m = 1`` this is the plain
linear construction ``T^n o H^{-n}``.

Pushing the elementary renormalizing family of the normal form through
``Psi_n^{-1}`` gives a renormalizing family for the iterates of ``H``.
"""
from dataclasses import dataclass, field
from typing import List, Optional, Protocol, Sequence, Tuple

import numpy as np
import numpy.polynomial.polynomial as npoly
import structlog

from ..errors import (
    DomainError,
    EvaluationError,
    HypothesisViolation,
    ResidualError,
    ResonanceError,
    SearchFailure,
    VerificationFailure,
)
from ..series import Jet
from ..series.jet import Scalar
from .elementary import (
    ElementaryMap,
    ScanRow,
    foreword_map,
    inverse_iterate_closed,
    limit_map,
    plan_renormalization,
    truncated_inverse,
)
from .sampling import polydisk_samples

logger = structlog.get_logger(__name__)

Pair = Tuple[np.ndarray, np.ndarray]

FIXED_POINT_TOLERANCE = 1e-12
INVERSE_TOLERANCE = 1e-10
DERIVATIVE_RADIUS = 1e-3
DERIVATIVE_SAMPLES = 16
TAYLOR_RADIUS = 0.5
TAYLOR_SAMPLES = 32
DEFAULT_DEGREE = 3
RESONANCE_TOLERANCE = 1e-9
PROBE_RADIUS = 0.1
PROBE_GRID = 5
NOISE_FLOOR = 1e-12
MONOTONICITY_LAG = 5
SINGULAR_TOLERANCE = 1e-8
JACOBIAN_CHOP = 1e-12


class Map2(Protocol):
    """Holomorphic map of C^2 evaluated componentwise on arrays."""

    def __call__(self, z, w) -> Pair:
        ...


def _pair(z, w) -> Pair:
    return np.asarray(z, dtype=np.complex128), np.asarray(w, dtype=np.complex128)


@dataclass(frozen=True, eq=False)
class PolynomialMap2:
    """``(z, w) -> (sum c1[i, j] z^i w^j, sum c2[i, j] z^i w^j)``."""

    first: np.ndarray
    second: np.ndarray

    def __post_init__(self) -> None:
        for name in ("first", "second"):
            coeffs = np.atleast_2d(np.asarray(getattr(self, name), dtype=np.complex128))
            object.__setattr__(self, name, coeffs)

    def __call__(self, z, w) -> Pair:
        z, w = _pair(z, w)
        return npoly.polyval2d(z, w, self.first), npoly.polyval2d(z, w, self.second)


@dataclass(frozen=True, eq=False)
class AffineMap2:
    """``x -> matrix @ x + shift``."""

    matrix: np.ndarray
    shift: Tuple[complex, complex] = (0j, 0j)

    def __post_init__(self) -> None:
        matrix = np.asarray(self.matrix, dtype=np.complex128)
        if matrix.shape != (2, 2):
            raise DomainError(f"affine map needs a 2x2 matrix, got shape {matrix.shape}")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "shift", (complex(self.shift[0]), complex(self.shift[1])))

    @classmethod
    def translation(cls, shift: Sequence[Scalar]) -> "AffineMap2":
        return cls(np.eye(2), (complex(shift[0]), complex(shift[1])))

    def __call__(self, z, w) -> Pair:
        z, w = _pair(z, w)
        m = self.matrix
        return m[0, 0] * z + m[0, 1] * w + self.shift[0], m[1, 0] * z + m[1, 1] * w + self.shift[1]

    def inverse(self) -> "AffineMap2":
        if abs(np.linalg.det(self.matrix)) == 0:
            raise DomainError("singular affine map is not invertible")
        inv = np.linalg.inv(self.matrix)
        shift = -(inv @ np.asarray(self.shift))
        return AffineMap2(inv, (shift[0], shift[1]))


@dataclass(frozen=True, eq=False)
class ShearMap2:
    """``(z, w) -> (z, w + q(z))``."""

    q: Jet

    def __call__(self, z, w) -> Pair:
        z, w = _pair(z, w)
        return z, w + self.q(z)

    def inverse(self) -> "ShearMap2":
        return ShearMap2(-self.q)


@dataclass(frozen=True, eq=False)
class ComposedMap2:
    """``maps[0] o maps[1] o ... o maps[-1]``."""

    maps: Tuple[Map2, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "maps", tuple(self.maps))

    def __call__(self, z, w) -> Pair:
        z, w = _pair(z, w)
        for step in reversed(self.maps):
            z, w = step(z, w)
        return z, w


def iterate_map(f: Map2, n: int, z, w) -> Pair:
    """``f^n(z, w)`` evaluated pointwise."""
    z, w = _pair(z, w)
    for _ in range(n):
        z, w = f(z, w)
    return z, w


@dataclass(frozen=True, eq=False)
class Automorphism2D:
    """A holomorphic automorphism given by closed-form forward and inverse maps."""

    forward: Map2
    inverse: Map2
    name: str = "automorphism"

    @classmethod
    def from_elementary(cls, F: ElementaryMap, name: str = "elementary") -> "Automorphism2D":
        return cls(F, inverse_iterate_closed(F, 1), name)

    @classmethod
    def foreword(cls, alpha: Scalar, beta: Scalar) -> "Automorphism2D":
        return cls.from_elementary(foreword_map(alpha, beta), "foreword")

    @classmethod
    def shear(cls, q: Jet) -> "Automorphism2D":
        S = ShearMap2(q)
        return cls(S, S.inverse(), "shear")

    @classmethod
    def identity(cls) -> "Automorphism2D":
        eye = AffineMap2(np.eye(2))
        return cls(eye, eye, "identity")

    def __call__(self, z, w) -> Pair:
        return self.forward(z, w)

    def conjugated_by(self, S: "Automorphism2D") -> "Automorphism2D":
        """``S^{-1} o H o S``."""
        return Automorphism2D(
            ComposedMap2((S.inverse, self.forward, S.forward)),
            ComposedMap2((S.inverse, self.inverse, S.forward)),
            f"{self.name}^{S.name}",
        )

    def translated(self, shift: Sequence[Scalar]) -> "Automorphism2D":
        """``tau o H o tau^{-1}`` with ``tau(x) = x + shift``."""
        tau = AffineMap2.translation(shift)
        tau_inv = tau.inverse()
        return Automorphism2D(
            ComposedMap2((tau, self.forward, tau_inv)),
            ComposedMap2((tau, self.inverse, tau_inv)),
            f"{self.name}+shift",
        )

    def check_inverse(self, z, w, tol: float = INVERSE_TOLERANCE) -> float:
        """Sup of ``|H(H^{-1}(x)) - x|`` on the points; raises above ``tol``."""
        z, w = _pair(z, w)
        fz, fw = self.forward(*self.inverse(z, w))
        error = float(np.max(np.hypot(np.abs(fz - z), np.abs(fw - w)), initial=0.0))
        scale = max(1.0, float(np.max(np.hypot(np.abs(z), np.abs(w)), initial=0.0)))
        if error > tol * scale:
            raise VerificationFailure(
                f"forward o inverse differs from the identity on {self.name}",
                {"error": error, "tolerance": tol},
            )
        return error


def taylor_coefficients(
    f: Map2, center: Sequence[complex], degree: int, radius: float, size: int
) -> np.ndarray:
    """Taylor coefficients of ``f(center + y)`` up to total degree ``degree``.

    Samples ``f`` on the torus ``|y1| = |y2| = radius`` with ``size`` points
    per circle; the result has shape ``(2, degree+1, degree+1)`` and is
    exact for polynomials of degree below ``size``.
    """
    if size <= degree:
        raise DomainError(f"torus size {size} must exceed the degree {degree}")
    roots = radius * np.exp(2j * np.pi * np.arange(size) / size)
    y1, y2 = np.meshgrid(roots, roots, indexing="ij")
    values = np.stack(f(center[0] + y1, center[1] + y2))
    if not np.all(np.isfinite(values)):
        raise EvaluationError("non-finite value while sampling a map on the torus")
    spectrum = np.fft.fft2(values, axes=(1, 2)) / size**2
    index = np.arange(degree + 1)
    scale = radius ** (index[:, None] + index[None, :]).astype(float)
    coeffs = spectrum[:, : degree + 1, : degree + 1] / scale
    coeffs[:, index[:, None] + index[None, :] > degree] = 0.0
    return coeffs


def jacobian(f: Map2, point: Sequence[complex], radius: float = DERIVATIVE_RADIUS) -> np.ndarray:
    """``Df(point)`` from the linear Taylor coefficients."""
    coeffs = taylor_coefficients(f, point, 1, radius, DERIVATIVE_SAMPLES)
    jac = np.array(
        [[coeffs[0, 1, 0], coeffs[0, 0, 1]], [coeffs[1, 1, 0], coeffs[1, 0, 1]]],
        dtype=np.complex128,
    )
    # zero the entries at the FFT noise floor
    jac[np.abs(jac) <= JACOBIAN_CHOP * np.max(np.abs(jac))] = 0.0
    return jac


@dataclass(frozen=True, eq=False)
class FixedPoint:
    point: Tuple[complex, complex]
    multipliers: Tuple[complex, complex]
    eigenvectors: np.ndarray
    iterations: int = 0
    trace: List[float] = field(default_factory=list)

    @property
    def repulsive(self) -> bool:
        return all(abs(lam) > 1 for lam in self.multipliers)

    def require_repulsive(self) -> "FixedPoint":
        for index, lam in enumerate(self.multipliers, start=1):
            if not abs(lam) > 1:
                raise HypothesisViolation(f"|lambda{index}| > 1", abs(lam), 1.0)
        return self


def multipliers_at(
    H: Map2, point: Sequence[complex]
) -> Tuple[Tuple[complex, complex], np.ndarray]:
    """Eigenvalues of ``DH(point)`` by ascending modulus and matching eigenvectors.

    Each eigenvector is scaled so its largest component equals 1.
    """
    values, vectors = np.linalg.eig(jacobian(H, point))
    order = np.argsort(np.abs(values), kind="stable")
    values, vectors = values[order], vectors[:, order]
    for col in range(2):
        pivot = vectors[np.argmax(np.abs(vectors[:, col])), col]
        vectors[:, col] = vectors[:, col] / pivot
    return (complex(values[0]), complex(values[1])), vectors


def find_fixed_point(
    H: Map2,
    guess: Sequence[Scalar],
    tol: float = FIXED_POINT_TOLERANCE,
    max_iter: int = 50,
) -> FixedPoint:
    """Newton iteration on ``H(x) - x``."""
    x = np.array([complex(guess[0]), complex(guess[1])], dtype=np.complex128)
    trace: List[float] = []
    for iteration in range(max_iter + 1):
        fz, fw = H(x[0], x[1])
        residual = np.array([fz - x[0], fw - x[1]], dtype=np.complex128)
        size = float(np.linalg.norm(residual))
        trace.append(size)
        if not np.isfinite(size):
            raise SearchFailure("Newton iteration produced a non-finite residual", trace)
        DH = jacobian(H, x)
        system = DH - np.eye(2)
        smallest = np.linalg.svd(system, compute_uv=False)[-1]
        if not smallest > SINGULAR_TOLERANCE * max(1.0, float(np.linalg.norm(DH, 2))):
            raise SearchFailure("singular Newton system for H - id", trace)
        if size <= tol:
            values, vectors = multipliers_at(H, x)
            logger.debug("fixed_point_found", iterations=iteration, residual=size)
            return FixedPoint((complex(x[0]), complex(x[1])), values, vectors, iteration, trace)
        x = x - np.linalg.solve(system, residual)
    raise SearchFailure(f"Newton iteration did not converge in {max_iter} steps", trace)


def _monomials(degree: int) -> List[Tuple[int, int]]:
    return [(i, degree - i) for i in range(degree, -1, -1)]


def normalizer_degree(lambdas: Tuple[complex, complex], requested: int = DEFAULT_DEGREE) -> int:
    """Larger of ``requested`` and the least ``m`` with ``|lambda2| < |lambda1|^{m+1}``."""
    small, large = abs(lambdas[0]), abs(lambdas[1])
    m = 1
    while not large < small ** (m + 1):
        m += 1
    return max(requested, m)


def check_resonances(
    lambdas: Tuple[complex, complex], degree: int, tol: float = RESONANCE_TOLERANCE
) -> None:
    """Reject ``lambda^a = lambda_i`` for ``2 <= |a| <= degree``."""
    for d in range(2, degree + 1):
        for a1, a2 in _monomials(d):
            product = lambdas[0] ** a1 * lambdas[1] ** a2
            for i, lam in enumerate(lambdas):
                if abs(product - lam) <= tol * abs(lam):
                    raise ResonanceError(
                        f"resonant multipliers: lambda1^{a1} lambda2^{a2} == lambda{i + 1}",
                        {"lambda1": repr(lambdas[0]), "lambda2": repr(lambdas[1]), "degree": d},
                    )


def _poly_eval(coeffs: np.ndarray, y1, y2) -> Pair:
    return npoly.polyval2d(y1, y2, coeffs[0]), npoly.polyval2d(y1, y2, coeffs[1])


def solve_normalizer(
    G: Map2,
    lambdas: Tuple[complex, complex],
    degree: int,
    radius: float = TAYLOR_RADIUS,
    size: int = TAYLOR_SAMPLES,
) -> np.ndarray:
    """Tangent-to-identity ``P`` with ``P o G = Lambda P`` up to ``degree``.

    ``G`` is the map in eigen-coordinates centred at the fixed point.
    Degree ``d`` coefficients are ``-Q / (lambda^a - lambda_i)`` where ``Q``
    is the degree ``d`` part of ``P_{<d} o G``.
    """
    P = np.zeros((2, degree + 1, degree + 1), dtype=np.complex128)
    P[0, 1, 0] = 1.0
    P[1, 0, 1] = 1.0
    for d in range(2, degree + 1):
        def composed(y1, y2, P=P.copy()):
            return _poly_eval(P, *G(y1, y2))

        Q = taylor_coefficients(composed, (0j, 0j), degree, radius, size)
        for a1, a2 in _monomials(d):
            product = lambdas[0] ** a1 * lambdas[1] ** a2
            for i in range(2):
                P[i, a1, a2] = -Q[i, a1, a2] / (product - lambdas[i])
    return P


def invert_normalizer(P: np.ndarray, z1, z2, tol: float = 1e-15, max_iter: int = 200) -> Pair:
    """Solve ``P(y) = z`` near 0 by the iteration ``y <- z - (P(y) - y)``."""
    z1, z2 = _pair(z1, z2)
    y1, y2 = z1.copy(), z2.copy()
    for _ in range(max_iter):
        p1, p2 = _poly_eval(P, y1, y2)
        n1, n2 = z1 - (p1 - y1), z2 - (p2 - y2)
        change = np.max(np.hypot(np.abs(n1 - y1), np.abs(n2 - y2)), initial=0.0)
        scale = np.max(np.hypot(np.abs(z1), np.abs(z2)), initial=0.0)
        y1, y2 = n1, n2
        if change <= tol * max(scale, np.finfo(float).tiny):
            return y1, y2
    raise SearchFailure("normalizer inversion did not converge; points outside its domain")


def _sup_distance(a: Pair, b: Pair) -> float:
    diff = np.hypot(np.abs(a[0] - b[0]), np.abs(a[1] - b[1]))
    if not np.all(np.isfinite(diff)):
        raise EvaluationError("non-finite value on the probe grid")
    return float(np.max(diff, initial=0.0))


@dataclass(frozen=True, eq=False)
class ConjugationApprox:
    """``Psi_n``, its inverse and the measured residual on the probe grid."""

    H: Automorphism2D
    fixed_point: FixedPoint
    n: int
    degree: int
    normalizer: np.ndarray
    probe_radius: float = PROBE_RADIUS
    probe_grid: int = PROBE_GRID
    residual: float = 0.0

    @property
    def normal_form(self) -> ElementaryMap:
        lam1, lam2 = self.fixed_point.multipliers
        return ElementaryMap(lam1, lam2)

    @property
    def rate(self) -> float:
        lam1, lam2 = self.fixed_point.multipliers
        return abs(lam2) / abs(lam1) ** (self.degree + 1)

    def _to_eigen(self, z, w) -> Pair:
        p = self.fixed_point.point
        inv = np.linalg.inv(self.fixed_point.eigenvectors)
        dz, dw = z - p[0], w - p[1]
        return inv[0, 0] * dz + inv[0, 1] * dw, inv[1, 0] * dz + inv[1, 1] * dw

    def _from_eigen(self, y1, y2) -> Pair:
        p = self.fixed_point.point
        E = self.fixed_point.eigenvectors
        return p[0] + E[0, 0] * y1 + E[0, 1] * y2, p[1] + E[1, 0] * y1 + E[1, 1] * y2

    def evaluate(self, z, w, depth: Optional[int] = None) -> Pair:
        """``Psi_n(z, w) = Lambda^n P(E^{-1}(H^{-n}(z, w) - p))``."""
        n = self.n if depth is None else depth
        lam1, lam2 = self.fixed_point.multipliers
        y1, y2 = self._to_eigen(*iterate_map(self.H.inverse, n, z, w))
        p1, p2 = _poly_eval(self.normalizer, y1, y2)
        return lam1**n * p1, lam2**n * p2

    def evaluate_inverse(self, z, w, depth: Optional[int] = None) -> Pair:
        """``Psi_n^{-1}(z, w) = H^n(p + E P^{-1}(Lambda^{-n}(z, w)))``."""
        n = self.n if depth is None else depth
        lam1, lam2 = self.fixed_point.multipliers
        z, w = _pair(z, w)
        y1, y2 = invert_normalizer(self.normalizer, lam1 ** (-n) * z, lam2 ** (-n) * w)
        return iterate_map(self.H.forward, n, *self._from_eigen(y1, y2))

    def probe(self) -> Pair:
        return polydisk_samples(self.probe_radius, self.probe_grid, self.fixed_point.point)

    def measure_residual(self, depth: Optional[int] = None) -> float:
        """Sup of ``|Psi_n(H(x)) - Lambda Psi_n(x)|`` over the probe polydisk."""
        z, w = self.probe()
        lam1, lam2 = self.fixed_point.multipliers
        left = self.evaluate(*self.H.forward(z, w), depth=depth)
        right = self.evaluate(z, w, depth=depth)
        return _sup_distance(left, (lam1 * right[0], lam2 * right[1]))

    def inverse_consistency(self, z, w) -> float:
        """Sup of ``|Psi_n(Psi_n^{-1}(y)) - y|`` on the given images."""
        z, w = _pair(z, w)
        return _sup_distance(self.evaluate(*self.evaluate_inverse(z, w)), (z, w))


def conjugation_approx(
    H: Automorphism2D,
    p: FixedPoint,
    n: int,
    degree: int = DEFAULT_DEGREE,
    probe_radius: float = PROBE_RADIUS,
    probe_grid: int = PROBE_GRID,
    resonance_tol: float = RESONANCE_TOLERANCE,
    check_monotone: bool = True,
) -> ConjugationApprox:
    """Build ``Psi_n`` about the repulsive fixed point ``p`` and measure its residual.

    Raises:
        HypothesisViolation: ``p`` is not repulsive
        ResonanceError: multipliers are resonant up to the normalizer degree
        ResidualError: the residual at ``n`` exceeds the one at ``n - 5``
    """
    if n < 1:
        raise DomainError(f"depth must be positive, got {n}")
    p.require_repulsive()
    m = normalizer_degree(p.multipliers, degree)
    check_resonances(p.multipliers, m, resonance_tol)

    base = ConjugationApprox(H, p, n, m, np.zeros((2, m + 1, m + 1)), probe_radius, probe_grid)

    def G(y1, y2):
        return base._to_eigen(*H.forward(*base._from_eigen(y1, y2)))

    normalizer = solve_normalizer(G, p.multipliers, m)
    approx = ConjugationApprox(H, p, n, m, normalizer, probe_radius, probe_grid)
    residual = approx.measure_residual()
    approx = ConjugationApprox(H, p, n, m, normalizer, probe_radius, probe_grid, residual)

    if check_monotone and n > MONOTONICITY_LAG:
        earlier = approx.measure_residual(n - MONOTONICITY_LAG)
        if residual > max(earlier, NOISE_FLOOR):
            raise ResidualError(
                "conjugation residual is not decreasing; the probe region may have left the basin",
                {"n": n, "residual": residual, "earlier": earlier, "lag": MONOTONICITY_LAG},
            )
    logger.info("conjugation_approx", automorphism=H.name, n=n, degree=m, residual=residual)
    return approx


def conjugation_scan(
    H: Automorphism2D, p: FixedPoint, depths: Sequence[int], **options
) -> List[ScanRow]:
    """Rows ``(n, residual)``; each depth runs the monotonicity diagnostic."""
    return [ScanRow(int(n), conjugation_approx(H, p, int(n), **options).residual) for n in depths]


@dataclass(frozen=True)
class PushedReport:
    n: int
    N: int
    error: float
    residual: float


def pushed_renorm_family(
    H: Automorphism2D,
    conj: ConjugationApprox,
    N: int,
    n: Optional[int] = None,
    probe_radius: Optional[float] = None,
    probe_grid: Optional[int] = None,
) -> PushedReport:
    """Sup distance between ``H^n o Psi_n^{-1} o f_n`` and ``Psi_n^{-1} o G``.

    ``f_n = T_N^{-n}`` and ``G`` is the limit ``(u, psi(u) + v)`` of the
    normal form ``T``; probe points ``w`` are taken about 0 in the
    ``Psi`` coordinates.
    """
    depth = conj.n if n is None else n
    T = conj.normal_form
    plan_renormalization(T, N).require()
    f_n = truncated_inverse(T, N, depth)
    G = limit_map(T, N)
    z, w = polydisk_samples(
        conj.probe_radius if probe_radius is None else probe_radius,
        conj.probe_grid if probe_grid is None else probe_grid,
    )
    pushed = iterate_map(H.forward, depth, *conj.evaluate_inverse(*f_n(z, w)))
    target = conj.evaluate_inverse(*G(z, w))
    error = _sup_distance(pushed, target)
    logger.info("pushed_renorm_family", n=depth, N=N, error=error, residual=conj.residual)
    return PushedReport(depth, N, error, conj.residual)


@dataclass(frozen=True)
class BoundedDegreeReport:
    conjugacy_error: float
    rows: List[ScanRow]


def bounded_degree_note(
    f: Map2,
    phi: Automorphism2D,
    F: ElementaryMap,
    N: int,
    n_list: Sequence[int],
    probe_radius: float = PROBE_RADIUS,
    probe_grid: int = PROBE_GRID,
    tol: float = 1e-10,
) -> BoundedDegreeReport:
    """Verify ``f = phi^{-1} F phi`` and scan the family ``phi^{-1} F_N^{-n} phi``.

    Each row is the sup over the probe polydisk of
    ``|f^n o phi^{-1} o F_N^{-n} o phi - phi^{-1} o G o phi|``.

    Raises:
        VerificationFailure: the conjugacy identity fails on the samples
    """
    z, w = polydisk_samples(probe_radius, probe_grid)
    expected = phi.inverse(*F(*phi.forward(z, w)))
    conjugacy_error = _sup_distance(f(z, w), expected)
    if conjugacy_error > tol:
        raise VerificationFailure(
            "f differs from phi^{-1} o F o phi on the samples",
            {"error": conjugacy_error, "tolerance": tol},
        )
    plan_renormalization(F, N).require()
    G = limit_map(F, N)
    u, v = phi.forward(z, w)
    target = phi.inverse(*G(u, v))
    rows = []
    for n in n_list:
        pushed = iterate_map(f, int(n), *phi.inverse(*truncated_inverse(F, N, int(n))(u, v)))
        rows.append(ScanRow(int(n), _sup_distance(pushed, target)))
    logger.info("bounded_degree_note", N=N, conjugacy_error=conjugacy_error, rows=len(rows))
    return BoundedDegreeReport(conjugacy_error, rows)
