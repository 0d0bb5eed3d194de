"""Elementary correspondences with an algebraic perturbation.

The perturbation is ``h = h_entire + A`` where ``A`` is a finite sum of
terms ``a (z - zeta)^lambda`` with ``zeta != 0`` and rational
``lambda > 0``. Near 0 the branch of ``A`` taking the principal value at
0 is a holomorphic germ on ``|z| < min |zeta|``; correspondences are
handled through that germ and a validity radius instead of the global
branched continuation.

The renormalizer subtracts ``A`` exactly along that branch and truncates
only the entire part, so the limit keeps entire-part coefficients only.
"""
import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Sequence, Tuple, Union

import numpy as np
import structlog

from ..errors import ConstructionError, DomainError
from ..series import DEFAULT_ORDER, CoefficientRule, Jet, truncate
from ..series.jet import Scalar
from .elementary import (
    ElementaryMap,
    PolyMap2,
    RenormPlan,
    ScanRow,
    iterate_closed,
    limit_psi,
    plan_renormalization,
    psi_partial,
)
from .sampling import disk_samples

logger = structlog.get_logger(__name__)

FIXED_POINT_TOLERANCE = 1e-12


@dataclass(frozen=True)
class AlgebraicTerm:
    """``coefficient * (z - branch_point)^exponent``."""

    coefficient: complex
    branch_point: complex
    exponent: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "coefficient", complex(self.coefficient))
        object.__setattr__(self, "branch_point", complex(self.branch_point))
        object.__setattr__(self, "exponent", Fraction(self.exponent))
        if self.branch_point == 0:
            raise DomainError("branch point at the origin is excluded")
        if self.exponent <= 0:
            raise DomainError(f"exponent must be a positive rational, got {self.exponent}")

    @property
    def is_polynomial(self) -> bool:
        return self.exponent.denominator == 1

    def leading_value(self) -> complex:
        """``(-zeta)^lambda`` on the principal branch; exact for integer exponents."""
        if self.is_polynomial:
            return (-self.branch_point) ** self.exponent.numerator
        return cmath.exp(float(self.exponent) * cmath.log(-self.branch_point))

    def binomial_coefficients(self, order: int) -> np.ndarray:
        """Coefficients of ``(1 - z/zeta)^lambda`` up to ``order``."""
        lam = self.exponent
        coeffs = np.zeros(order + 1, dtype=np.complex128)
        coeffs[0] = 1.0
        ratio = -1.0 / self.branch_point
        for l in range(1, order + 1):
            if self.is_polynomial:
                factor = complex(Fraction(lam - l + 1, l))
            else:
                factor = (float(lam) - l + 1) / l
            coeffs[l] = coeffs[l - 1] * factor * ratio
        return coeffs

    def __call__(self, z):
        z = np.asarray(z, dtype=np.complex128)
        if self.is_polynomial:
            return self.coefficient * (z - self.branch_point) ** self.exponent.numerator
        factor = np.exp(float(self.exponent) * np.log(1.0 - z / self.branch_point))
        return self.coefficient * self.leading_value() * factor


@dataclass(frozen=True)
class AlgebraicPart:
    """Finite sum of algebraic terms plus an additive constant."""

    terms: Tuple[AlgebraicTerm, ...] = field(default_factory=tuple)
    offset: complex = 0j

    def __post_init__(self) -> None:
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "offset", complex(self.offset))

    @classmethod
    def single(
        cls, coefficient: Scalar, branch_point: Scalar, exponent: Union[str, Fraction, int]
    ) -> "AlgebraicPart":
        return cls((AlgebraicTerm(coefficient, branch_point, Fraction(exponent)),))

    @property
    def empty(self) -> bool:
        return not self.terms and self.offset == 0

    @property
    def radius(self) -> float:
        """Branch-validity radius ``min |zeta|`` (infinite without terms)."""
        return min((abs(t.branch_point) for t in self.terms), default=math.inf)

    def value_at_origin(self) -> complex:
        return self.offset + sum((t.coefficient * t.leading_value() for t in self.terms), 0j)

    def normalized(self) -> "AlgebraicPart":
        """Same terms with the offset making the branch vanish at 0."""
        return AlgebraicPart(self.terms, self.offset - self.value_at_origin())


def branch_value(A: AlgebraicPart, z):
    """Direct evaluation of the branch of ``A`` chosen at 0, for ``|z| < radius``.

    Each factor is ``(-zeta)^lambda * exp(lambda * Log(1 - z/zeta))``: the
    principal value at 0, continued holomorphically across the disk.
    """
    z = np.asarray(z, dtype=np.complex128)
    total = np.full(z.shape, A.offset, dtype=np.complex128)
    for term in A.terms:
        total = total + term(z)
    return total if total.ndim else complex(total)


def branch_germ(A: AlgebraicPart, K: int = DEFAULT_ORDER) -> Jet:
    """Order-K jet at 0 of the branch of ``A`` chosen at 0.

    Expands ``(z - zeta)^lambda = (-zeta)^lambda (1 - z/zeta)^lambda`` with
    the binomial series, valid on ``|z| < |zeta|``.
    """
    coeffs = np.zeros(K + 1, dtype=np.complex128)
    coeffs[0] = A.offset
    for term in A.terms:
        coeffs += term.coefficient * term.leading_value() * term.binomial_coefficients(K)
    return Jet(coeffs)


@dataclass(frozen=True, eq=False)
class ElementaryCorrespondence:
    """Correspondence generated by the germ ``L + (0, h_entire + A)``.

    ``L = diag(c1, c2)`` is expanding and ``h(0) = 0`` is required.
    """

    c1: complex
    c2: complex
    entire_part: CoefficientRule = field(default_factory=CoefficientRule.zero)
    algebraic_part: AlgebraicPart = field(default_factory=AlgebraicPart)

    def __post_init__(self) -> None:
        object.__setattr__(self, "c1", complex(self.c1))
        object.__setattr__(self, "c2", complex(self.c2))
        if abs(self.c1) <= 1 or abs(self.c2) <= 1:
            raise DomainError(
                "the linear part must be expanding",
                {"c1": repr(self.c1), "c2": repr(self.c2)},
            )
        value = self.h_at_origin()
        if abs(value) > FIXED_POINT_TOLERANCE:
            raise ConstructionError(
                "fixed-point hypothesis h(0) = 0 violated", {"h0": repr(value)}
            )

    @property
    def rho(self) -> float:
        return min(self.algebraic_part.radius, self.entire_part.radius)

    def h_at_origin(self) -> complex:
        return self.entire_part.coefficient(0) + self.algebraic_part.value_at_origin()

    def germ_jet(self, K: int = DEFAULT_ORDER) -> Jet:
        return self.entire_part.jet(K) + branch_germ(self.algebraic_part, K)

    def h(self, u):
        """``h`` on ``|u| < rho``: entire part by its jet, algebraic part exactly."""
        return self.entire_part.jet()(u) + branch_value(self.algebraic_part, u)

    def entire_map(self) -> ElementaryMap:
        """The elementary map ``(c1 u, c2 v + h_entire(u))``."""
        return ElementaryMap(self.c1, self.c2, self.entire_part)

    def germ_map(self, K: int = DEFAULT_ORDER) -> ElementaryMap:
        """The elementary map built on the germ jet of ``h``."""
        return ElementaryMap(
            self.c1, self.c2, CoefficientRule.from_jet(self.germ_jet(K), self.rho, "germ")
        )


@dataclass(frozen=True)
class BranchIterate:
    """The branch ``phi_n`` of the n-th iterate through the fixed point 0."""

    n: int
    germ: PolyMap2
    validity_radius: float


def _require_fixed_point(C: ElementaryCorrespondence) -> None:
    value = C.h_at_origin()
    if abs(value) > FIXED_POINT_TOLERANCE:
        raise ConstructionError("fixed-point hypothesis h(0) = 0 violated", {"h0": repr(value)})


def branch_iterate(C: ElementaryCorrespondence, n: int, K: int = DEFAULT_ORDER) -> BranchIterate:
    """Germ of ``phi_n`` with validity radius ``rho / |c1|^{n-1}``."""
    if n < 1:
        raise DomainError(f"iterate count must be positive, got {n}")
    _require_fixed_point(C)
    germ = iterate_closed(C.germ_map(K), n, K)
    return BranchIterate(n, germ, C.rho / abs(C.c1) ** (n - 1))


@dataclass(frozen=True, eq=False)
class CorrespondenceRenormalizer:
    """``chi_n = L^{-n} - (0, alpha_n)`` with

    ``alpha_n(u) = sum_{k=1}^n c2^{-k} [P_N + A](c1^{k-n-1} u)``.
    """

    C: ElementaryCorrespondence
    N: int
    n: int
    plan: RenormPlan
    truncation: Jet

    @property
    def validity_radius(self) -> float:
        # arguments c1^{k-n-1} u with k <= n stay inside |z| < rho
        return self.C.rho * abs(self.C.c1)

    def correction(self, u):
        """``alpha_n(u)``."""
        u = np.asarray(u, dtype=np.complex128)
        total = np.zeros(u.shape, dtype=np.complex128)
        for k in range(1, self.n + 1):
            arg = self.C.c1 ** (k - self.n - 1) * u
            total = total + self.C.c2 ** (-k) * (
                self.truncation(arg) + branch_value(self.C.algebraic_part, arg)
            )
        return total

    def __call__(self, u, v):
        u = np.asarray(u, dtype=np.complex128)
        v = np.asarray(v, dtype=np.complex128)
        return self.C.c1 ** (-self.n) * u, self.C.c2 ** (-self.n) * v - self.correction(u)

    def renormalized(self, u, v):
        """``phi_n o chi_n`` evaluated directly with the exact branch of ``A``."""
        x, y = self(u, v)
        second = self.C.c2**self.n * y
        for k in range(self.n):
            second = second + self.C.c2**k * self.C.h(self.C.c1 ** (self.n - 1 - k) * x)
        return self.C.c1**self.n * x, second


def corr_renorm_family(
    C: ElementaryCorrespondence, N: int, n: int, K: int = DEFAULT_ORDER
) -> CorrespondenceRenormalizer:
    """Renormalizer ``chi_n`` of the branch iterates ``phi_n``."""
    if n < 1:
        raise DomainError(f"iterate count must be positive, got {n}")
    plan = plan_renormalization(C.entire_map(), N).require()
    return CorrespondenceRenormalizer(C, N, n, plan, truncate(C.entire_part, N, K))


def corr_renorm_compose(
    C: ElementaryCorrespondence, N: int, n: int, K: int = DEFAULT_ORDER
) -> PolyMap2:
    """Closed form ``phi_n o chi_n = (u, psi_n(u) + v)``; ``A`` cancels exactly."""
    plan_renormalization(C.entire_map(), N).require()
    return PolyMap2(1.0, psi_partial(C.entire_map(), N, n, K), 1.0)


def corr_limit(C: ElementaryCorrespondence, N: int, K: int = DEFAULT_ORDER) -> Jet:
    """``psi(u) = sum_{l >= N} eta_l u^l / (c1^l - c2)`` over the entire part."""
    return limit_psi(C.entire_map(), N, K)


def correspondence_scan(
    C: ElementaryCorrespondence,
    N: int,
    radius: float,
    grid: int,
    n_list: Sequence[int],
    K: int = DEFAULT_ORDER,
) -> List[ScanRow]:
    """Sup of ``|psi_n - psi|`` on the disk ``|u| <= radius``."""
    if radius >= C.rho * abs(C.c1):
        raise DomainError(
            "scan radius exceeds the validity radius of the renormalizer",
            {"radius": radius, "limit": C.rho * abs(C.c1)},
        )
    samples = disk_samples(radius, grid)
    psi = corr_limit(C, N, K)(samples)
    rows = []
    for n in n_list:
        psi_n = corr_renorm_compose(C, N, n, K).q(samples)
        rows.append(ScanRow(int(n), float(np.max(np.abs(psi_n - psi)))))
    logger.debug("correspondence_scan", N=N, rows=len(rows), rho=C.rho)
    return rows
