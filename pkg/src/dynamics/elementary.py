"""Elementary maps ``F(u, v) = (alpha*u, beta*v + h(u))`` of C^2.

Closed-form iterates and inverses, the truncated contracting family
``F_N^{-n}``, the renormalized compositions ``F^n o F_N^{-n}`` and their
entire limit ``(u, psi(u) + v)``, plus the linear-renormalization
counterexample for ``(alpha*z, beta*w + z^2)``.

Truncations keep the degrees strictly below ``N`` and remainders start at
degree ``N``; with that convention the limit is
``psi(u) = sum_{l >= N} eta_l u^l / (alpha^l - beta)``.
"""
import cmath
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import structlog

from ..errors import (
    DomainError,
    EvaluationError,
    HypothesisViolation,
    PreconditionError,
    ResonanceError,
)
from ..series import DEFAULT_ORDER, CoefficientRule, Jet, remainder, truncate
from ..series.jet import Scalar, _powers
from .sampling import disk_samples

logger = structlog.get_logger(__name__)

RESONANCE_TOLERANCE = 1e-12


def _finite_complex(value: Scalar, name: str) -> complex:
    z = complex(value)
    if not cmath.isfinite(z):
        raise EvaluationError(f"{name} must be finite, got {z!r}")
    return z


@dataclass(frozen=True, eq=False)
class PolyMap2:
    """Triangular map ``(u, v) -> (a*u, q(u) + b*v)``."""

    a: complex
    q: Jet
    b: complex

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", _finite_complex(self.a, "a"))
        object.__setattr__(self, "b", _finite_complex(self.b, "b"))

    @classmethod
    def identity(cls, order: int = DEFAULT_ORDER) -> "PolyMap2":
        return cls(1.0, Jet.zeros(order), 1.0)

    @property
    def order(self) -> int:
        return self.q.order

    def __call__(self, u, v) -> Tuple[np.ndarray, np.ndarray]:
        u = np.asarray(u, dtype=np.complex128)
        v = np.asarray(v, dtype=np.complex128)
        return self.a * u, self.q(u) + self.b * v

    def jacobian(self, u, v) -> np.ndarray:
        """Holomorphic Jacobian, shape ``(..., 2, 2)``."""
        u = np.asarray(u, dtype=np.complex128)
        jac = np.zeros(u.shape + (2, 2), dtype=np.complex128)
        jac[..., 0, 0] = self.a
        jac[..., 1, 0] = self.q.derivative()(u)
        jac[..., 1, 1] = self.b
        return jac

    def compose(self, inner: "PolyMap2") -> "PolyMap2":
        """``self o inner``; triangular maps are closed under composition."""
        return PolyMap2(
            self.a * inner.a,
            self.q.arg_scale(inner.a) + inner.q.scale(self.b),
            self.b * inner.b,
        )

    def inverse(self) -> "PolyMap2":
        if self.a == 0 or self.b == 0:
            raise DomainError("triangular map with a zero multiplier is not invertible")
        return PolyMap2(
            1.0 / self.a, -self.q.arg_scale(1.0 / self.a).scale(1.0 / self.b), 1.0 / self.b
        )

    def allclose(self, other: "PolyMap2", rtol: float = 1e-10) -> bool:
        def close(x: complex, y: complex) -> bool:
            return abs(x - y) <= rtol * max(abs(x), abs(y), 1.0)

        return close(self.a, other.a) and close(self.b, other.b) and self.q.allclose(other.q, rtol)


@dataclass(frozen=True, eq=False)
class ElementaryMap:
    """``F(u, v) = (alpha*u, beta*v + h(u))``."""

    alpha: complex
    beta: complex
    h: CoefficientRule = field(default_factory=CoefficientRule.zero)

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", _finite_complex(self.alpha, "alpha"))
        object.__setattr__(self, "beta", _finite_complex(self.beta, "beta"))

    @classmethod
    def from_coefficients(
        cls, alpha: Scalar, beta: Scalar, coeffs: Sequence[Scalar]
    ) -> "ElementaryMap":
        return cls(alpha, beta, CoefficientRule.polynomial(coeffs))

    @property
    def invertible(self) -> bool:
        return self.alpha != 0 and self.beta != 0

    def h_jet(self, order: int = DEFAULT_ORDER) -> Jet:
        return self.h.jet(order)

    def as_polymap(self, order: int = DEFAULT_ORDER) -> PolyMap2:
        return PolyMap2(self.alpha, self.h_jet(order), self.beta)

    def __call__(self, u, v):
        return self.as_polymap()(u, v)


def foreword_map(alpha: Scalar, beta: Scalar) -> ElementaryMap:
    """``(alpha*z, beta*w + z^2)``, repulsive at 0 when both moduli exceed 1."""
    return ElementaryMap(alpha, beta, CoefficientRule.monomial(2))


@dataclass(frozen=True)
class HypothesisCheck:
    """One inequality of the renormalization theorem, with its margin."""

    inequality: str
    lhs: float
    rhs: float
    relation: str

    @property
    def holds(self) -> bool:
        return self.lhs > self.rhs if self.relation == ">" else self.lhs < self.rhs

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs if self.relation == ">" else self.rhs - self.lhs

    def to_dict(self) -> dict:
        return {
            "inequality": self.inequality,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "holds": self.holds,
            "margin": self.margin,
        }


@dataclass(frozen=True)
class RenormPlan:
    """Truncation degree plus the validated hypotheses and contraction rate."""

    N: int
    checks: Tuple[HypothesisCheck, ...]
    rate: float

    @property
    def valid(self) -> bool:
        return all(check.holds for check in self.checks)

    def require(self) -> "RenormPlan":
        for check in self.checks:
            if not check.holds:
                logger.info("hypothesis_failed", **check.to_dict())
                raise HypothesisViolation(check.inequality, check.lhs, check.rhs)
        return self

    def to_dict(self) -> dict:
        return {"N": self.N, "rate": self.rate, "checks": [c.to_dict() for c in self.checks]}


def _expansion_checks(alpha: complex, beta: complex) -> Tuple[HypothesisCheck, ...]:
    return (
        HypothesisCheck("|alpha| > 1", abs(alpha), 1.0, ">"),
        HypothesisCheck("|beta| > 1", abs(beta), 1.0, ">"),
    )


def plan_renormalization(F: ElementaryMap, N: int) -> RenormPlan:
    """Record the hypotheses ``|alpha|>1``, ``|beta|>1``, ``|beta|<|alpha|^N``."""
    if N < 1:
        raise DomainError(f"truncation degree must be >= 1, got {N}")
    bound = abs(F.alpha) ** N
    checks = _expansion_checks(F.alpha, F.beta) + (
        HypothesisCheck("|beta| < |alpha|^N", abs(F.beta), bound, "<"),
    )
    rate = abs(F.beta) / bound if bound else math.inf
    return RenormPlan(N, checks, rate)


def min_truncation_degree(F: ElementaryMap) -> int:
    """Smallest ``N >= 1`` with ``|beta| < |alpha|^N`` (strict)."""
    for check in _expansion_checks(F.alpha, F.beta):
        if not check.holds:
            raise HypothesisViolation(check.inequality, check.lhs, check.rhs)
    N = 1
    while not abs(F.beta) < abs(F.alpha) ** N:
        N += 1
    return N


def iterate_closed(F: ElementaryMap, n: int, K: int = DEFAULT_ORDER) -> PolyMap2:
    """``F^n(u, v) = (alpha^n u, sum_{k<n} beta^k h(alpha^{n-1-k} u) + beta^n v)``."""
    if n < 0:
        raise DomainError(f"iterate count must be non-negative, got {n}")
    if n == 0:
        return PolyMap2.identity(K)
    h = F.h_jet(K)
    q = Jet.zeros(K)
    for k in range(n):
        q = q + h.arg_scale(F.alpha ** (n - 1 - k)).scale(F.beta**k)
    return PolyMap2(F.alpha**n, q, F.beta**n)


def compose_iterates(F: ElementaryMap, n: int, K: int = DEFAULT_ORDER) -> PolyMap2:
    """``F o ... o F`` (n times) by repeated jet composition."""
    result = PolyMap2.identity(K)
    step = F.as_polymap(K)
    for _ in range(n):
        result = step.compose(result)
    return result


def _inverse_formula(alpha: complex, beta: complex, p: Jet, n: int) -> PolyMap2:
    q = Jet.zeros(p.order)
    for k in range(1, n + 1):
        q = q - p.arg_scale(alpha ** (k - n - 1)).scale(beta ** (-k))
    return PolyMap2(alpha ** (-n), q, beta ** (-n))


def _require_invertible(F: ElementaryMap, n: int) -> None:
    if not F.invertible:
        raise DomainError(
            "elementary map is not invertible",
            {"alpha": repr(F.alpha), "beta": repr(F.beta)},
        )
    if n < 1:
        raise DomainError(f"inverse iterate count must be positive, got {n}")


def inverse_iterate_closed(F: ElementaryMap, n: int, K: int = DEFAULT_ORDER) -> PolyMap2:
    """Closed-form inverse iterate.

    ``F^{-n}(u, v) = (alpha^{-n} u, -sum_{k=1}^n beta^{-k} h(alpha^{k-n-1} u) + beta^{-n} v)``
    """
    _require_invertible(F, n)
    return _inverse_formula(F.alpha, F.beta, F.h_jet(K), n)


def truncated_inverse(F: ElementaryMap, N: int, n: int, K: int = DEFAULT_ORDER) -> PolyMap2:
    """``F_N^{-n}``: the inverse formula with ``h`` replaced by its truncation ``P_N``."""
    _require_invertible(F, n)
    return _inverse_formula(F.alpha, F.beta, truncate(F.h, N, K), n)


def psi_partial(F: ElementaryMap, N: int, n: int, K: int = DEFAULT_ORDER) -> Jet:
    """``psi_n(u) = sum_{k<n} beta^k R_N(alpha^{-1-k} u)``.

    Summed per degree as ``alpha^{-l} sum_k (beta alpha^{-l})^k`` so every
    term is bounded by ``rate^k`` for ``l >= N``.
    """
    if n < 1:
        raise DomainError(f"iterate count must be positive, got {n}")
    order = max(K, N)
    tail = remainder(F.h, N, order)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        base = _powers(1.0 / F.alpha, order + 1)
        ratio = F.beta * base
        term = base.copy()
        total = np.zeros(order + 1, dtype=np.complex128)
        for _ in range(n):
            total += term
            term = term * ratio
        coeffs = np.where(tail.coeffs != 0, tail.coeffs * total, 0.0)
    return Jet(coeffs)


def renorm_compose(F: ElementaryMap, N: int, n: int, K: int = DEFAULT_ORDER) -> PolyMap2:
    """``F^n o F_N^{-n} = (u, psi_n(u) + v)``; the first multiplier is exactly 1."""
    plan_renormalization(F, N).require()
    return PolyMap2(1.0, psi_partial(F, N, n, K), 1.0)


def limit_psi(F: ElementaryMap, N: int, K: int = DEFAULT_ORDER) -> Jet:
    """``psi(u) = sum_{l >= N} eta_l u^l / (alpha^l - beta)`` as an order-K jet."""
    plan_renormalization(F, N).require()
    order = max(K, N)
    tail = remainder(F.h, N, order)
    with np.errstate(over="ignore"):
        divisors = _powers(F.alpha, order + 1) - F.beta
    coeffs = np.zeros(order + 1, dtype=np.complex128)
    for degree in range(N, order + 1):
        if tail.coeffs[degree] == 0:
            continue
        divisor = divisors[degree]
        if abs(divisor) <= RESONANCE_TOLERANCE * abs(F.beta):
            raise ResonanceError(
                f"resonance alpha^{degree} == beta",
                {"degree": degree, "alpha": repr(F.alpha), "beta": repr(F.beta)},
            )
        coeffs[degree] = tail.coeffs[degree] / divisor
    return Jet(coeffs)


def limit_map(F: ElementaryMap, N: int, K: int = DEFAULT_ORDER) -> PolyMap2:
    """The triangular automorphism ``G(u, v) = (u, psi(u) + v)``."""
    return PolyMap2(1.0, limit_psi(F, N, K), 1.0)


@dataclass(frozen=True)
class ScanRow:
    n: int
    sup_error: float


def _check_scan_radius(h: CoefficientRule, alpha: complex, radius: float) -> None:
    # arguments alpha^{-1-k} u must stay inside the disk of convergence of h
    if math.isfinite(h.radius) and radius >= h.radius * abs(alpha):
        raise PreconditionError(
            "scan radius leaves the disk of convergence of h",
            {"radius": radius, "limit": h.radius * abs(alpha)},
        )


def convergence_scan(
    F: ElementaryMap,
    N: int,
    radius: float,
    grid: int,
    n_list: Sequence[int],
    K: int = DEFAULT_ORDER,
) -> List[ScanRow]:
    """Sup distance between ``F^n o F_N^{-n}`` and its limit on a polydisk sample.

    Args:
        F (ElementaryMap): The map
        N (int): Truncation degree
        radius (float): Polydisk radius
        grid (int): Lattice points per real axis of each coordinate disk
        n_list (Sequence[int]): Iterate counts, one table row each
        K (int): Jet order

    Returns:
        List[ScanRow]: ``(n, sup_error)`` rows in the order of ``n_list``
    """
    plan_renormalization(F, N).require()
    _check_scan_radius(F.h, F.alpha, radius)
    samples = disk_samples(radius, grid)
    u, v = (x.ravel() for x in np.meshgrid(samples, samples, indexing="ij"))
    limit_u, limit_v = limit_map(F, N, K)(u, v)
    rows = []
    for n in n_list:
        ren_u, ren_v = renorm_compose(F, N, n, K)(u, v)
        error = np.maximum(np.abs(ren_u - limit_u), np.abs(ren_v - limit_v))
        rows.append(ScanRow(int(n), float(np.max(error))))
    logger.debug("convergence_scan", N=N, points=u.size, rows=len(rows))
    return rows


def fit_decay_ratio(ns: Sequence[int], errors: Sequence[float]) -> float:
    """Geometric ratio fitted to ``errors ~ C * ratio^n`` by least squares on logs."""
    pairs = [(n, e) for n, e in zip(ns, errors) if e > 0]
    if len(pairs) < 2:
        return 0.0
    x = np.array([p[0] for p in pairs], dtype=float)
    y = np.log([p[1] for p in pairs])
    slope, _ = np.polyfit(x, y, 1)
    return float(np.exp(slope))


def linear_renorm_coefficient(alpha: Scalar, beta: Scalar, k: int) -> complex:
    """Coefficient of ``z^2`` in ``[F_*(0)]^{-k} F^k`` for ``(alpha z, beta w + z^2)``.

    Equals ``beta^{-1} (1 + c + ... + c^{k-1})`` with ``c = alpha^2 / beta``.
    """
    alpha, beta = complex(alpha), complex(beta)
    if beta == 0:
        raise DomainError("beta must be nonzero")
    if k < 1:
        raise DomainError(f"k must be positive, got {k}")
    c = alpha * alpha / beta
    total, term = 0j, 1 + 0j
    for _ in range(k):
        total += term
        term *= c
    return total / beta


@dataclass(frozen=True)
class CounterexampleRow:
    k: int
    coefficient: complex
    ratio: float

    @property
    def modulus(self) -> float:
        return abs(self.coefficient)


def counterexample_table(alpha: Scalar, beta: Scalar, k_max: int) -> List[CounterexampleRow]:
    """Rows ``(k, coef(k), |coef(k+1)| / |coef(k)|)`` for ``k = 1..k_max``."""
    coefficients = [linear_renorm_coefficient(alpha, beta, k) for k in range(1, k_max + 2)]
    rows = []
    for k in range(1, k_max + 1):
        current, following = coefficients[k - 1], coefficients[k]
        ratio = abs(following) / abs(current) if current != 0 else math.inf
        rows.append(CounterexampleRow(k, current, ratio))
    return rows


def linear_renorm_limit(alpha: Scalar, beta: Scalar) -> Optional[complex]:
    """``1 / (beta - alpha^2)`` when ``|beta| > |alpha|^2``; ``None`` when it diverges."""
    alpha, beta = complex(alpha), complex(beta)
    if abs(beta) > abs(alpha) ** 2:
        return 1.0 / (beta - alpha * alpha)
    return None
