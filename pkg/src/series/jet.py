"""Truncated complex power series (jets) in one variable.

A :class:`Jet` of order ``K`` holds the coefficients ``c_0..c_K`` of a
power series; coefficients beyond ``K`` are unknown, so binary arithmetic
returns the smaller of the two orders. Every higher module computes with
jets: iterates of elementary maps, remainders of perturbations, branch
germs of algebraic terms.
"""
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
from numpy.polynomial import polynomial as npoly

from ..errors import DomainError, EvaluationError

DEFAULT_ORDER = 32

Scalar = Union[complex, float, int]


def _frozen_coefficients(values: Sequence[Scalar]) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128)
    if arr.ndim != 1 or arr.size == 0:
        raise DomainError("a jet needs a non-empty one-dimensional coefficient vector")
    if not np.all(np.isfinite(arr)):
        raise EvaluationError("non-finite jet coefficient", {"coeffs": repr(arr)})
    arr.setflags(write=False)
    return arr


def _powers(base: complex, count: int) -> np.ndarray:
    # repeated multiplication keeps 0**0 == 1 and exact integer powers
    steps = np.full(count, base, dtype=np.complex128)
    steps[0] = 1.0
    return np.cumprod(steps)


@dataclass(frozen=True, eq=False)
class Jet:
    """Immutable truncated power series ``c_0 + c_1 u + ... + c_K u^K``."""

    coeffs: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeffs", _frozen_coefficients(self.coeffs))

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    @classmethod
    def zeros(cls, order: int = DEFAULT_ORDER) -> "Jet":
        if order < 0:
            raise DomainError(f"jet order must be non-negative, got {order}")
        return cls(np.zeros(order + 1, dtype=np.complex128))

    @classmethod
    def constant(cls, value: Scalar, order: int = DEFAULT_ORDER) -> "Jet":
        coeffs = np.zeros(order + 1, dtype=np.complex128)
        coeffs[0] = value
        return cls(coeffs)

    @classmethod
    def monomial(
        cls, degree: int, order: int = DEFAULT_ORDER, coefficient: Scalar = 1.0
    ) -> "Jet":
        coeffs = np.zeros(order + 1, dtype=np.complex128)
        if degree <= order:
            coeffs[degree] = coefficient
        return cls(coeffs)

    @classmethod
    def from_polynomial(
        cls, coeffs: Sequence[Scalar], order: Optional[int] = None
    ) -> "Jet":
        """Jet of an exact polynomial, padded with zeros up to ``order``."""
        values = np.asarray(coeffs, dtype=np.complex128)
        if order is None:
            order = max(values.size - 1, 0)
        padded = np.zeros(order + 1, dtype=np.complex128)
        keep = min(values.size, order + 1)
        padded[:keep] = values[:keep]
        return cls(padded)

    def __getitem__(self, degree: int) -> complex:
        return complex(self.coeffs[degree])

    def __len__(self) -> int:
        return self.coeffs.size

    def __repr__(self) -> str:
        return f"Jet(order={self.order}, coeffs={np.array2string(self.coeffs, precision=6)})"

    @property
    def degree(self) -> int:
        """Highest degree with a nonzero coefficient (-1 for the zero jet)."""
        nonzero = np.flatnonzero(self.coeffs)
        return int(nonzero[-1]) if nonzero.size else -1

    def with_order(self, order: int) -> "Jet":
        """Cut to ``order`` or pad with zero coefficients up to it."""
        return Jet.from_polynomial(self.coeffs, order)

    def _common(self, other: "Jet") -> tuple:
        order = min(self.order, other.order)
        return self.coeffs[: order + 1], other.coeffs[: order + 1], order

    def __add__(self, other: Union["Jet", Scalar]) -> "Jet":
        if not isinstance(other, Jet):
            coeffs = self.coeffs.copy()
            coeffs[0] += other
            return Jet(coeffs)
        a, b, _ = self._common(other)
        return Jet(a + b)

    __radd__ = __add__

    def __neg__(self) -> "Jet":
        return Jet(-self.coeffs)

    def __sub__(self, other: Union["Jet", Scalar]) -> "Jet":
        return self + (-other)

    def __rsub__(self, other: Scalar) -> "Jet":
        return (-self) + other

    def __mul__(self, other: Union["Jet", Scalar]) -> "Jet":
        if not isinstance(other, Jet):
            return self.scale(other)
        a, b, order = self._common(other)
        return Jet(np.convolve(a, b)[: order + 1])

    __rmul__ = __mul__

    def __truediv__(self, other: Scalar) -> "Jet":
        if other == 0:
            raise DomainError("division of a jet by zero")
        return self.scale(1.0 / other)

    def scale(self, factor: Scalar) -> "Jet":
        return Jet(self.coeffs * complex(factor))

    def truncate(self, degree_bound: int) -> "Jet":
        """Zero every coefficient of degree ``>= degree_bound``."""
        coeffs = self.coeffs.copy()
        coeffs[max(degree_bound, 0):] = 0.0
        return Jet(coeffs)

    def tail(self, degree_bound: int) -> "Jet":
        """Zero every coefficient of degree ``< degree_bound``."""
        coeffs = self.coeffs.copy()
        coeffs[: max(degree_bound, 0)] = 0.0
        return Jet(coeffs)

    def derivative(self) -> "Jet":
        if self.order == 0:
            return Jet.zeros(0)
        return Jet(self.coeffs[1:] * np.arange(1, self.order + 1))

    def arg_scale(self, factor: Scalar) -> "Jet":
        """Jet of ``u -> j(factor * u)``."""
        with np.errstate(over="ignore", invalid="ignore"):
            powers = _powers(complex(factor), self.coeffs.size)
            scaled = np.where(self.coeffs != 0, self.coeffs * powers, 0.0)
        return Jet(scaled)

    def __call__(self, z):
        """Horner evaluation at a scalar or an array of points."""
        values = npoly.polyval(np.asarray(z, dtype=np.complex128), self.coeffs)
        if not np.all(np.isfinite(values)):
            raise EvaluationError("non-finite jet evaluation")
        return values if np.ndim(values) else complex(values)

    def compose(self, inner: "Jet", recenter: bool = False) -> "Jet":
        """Jet of ``self(inner(u))``.

        Args:
            inner (Jet): Inner series; must vanish at 0 unless ``recenter``
            recenter (bool): Treat ``self`` as an exact polynomial and allow
                a nonzero constant term in ``inner``

        Returns:
            Jet: The composition at order ``min(self.order, inner.order)``
        """
        if inner.coeffs[0] != 0 and not recenter:
            raise DomainError(
                "germ composition needs inner(0) == 0; pass recenter=True "
                "to compose an exact polynomial",
                {"inner_constant": repr(complex(inner.coeffs[0]))},
            )
        order = min(self.order, inner.order)
        b = inner.coeffs[: order + 1]
        acc = np.zeros(order + 1, dtype=np.complex128)
        acc[0] = self.coeffs[order]
        for degree in range(order - 1, -1, -1):
            acc = np.convolve(acc, b)[: order + 1]
            acc[0] += self.coeffs[degree]
        return Jet(acc)

    def allclose(self, other: "Jet", rtol: float = 1e-12, atol: float = 0.0) -> bool:
        a, b, _ = self._common(other)
        scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), 1.0)
        return bool(np.all(np.abs(a - b) <= atol + rtol * scale))


def _monomial_degree(value: Scalar) -> int:
    # configs hand every rule parameter over as a complex number
    degree = complex(value)
    if degree.imag != 0 or degree.real < 0 or degree.real != int(degree.real):
        raise DomainError(f"monomial degree must be a non-negative integer, got {value!r}")
    return int(degree.real)


@dataclass(frozen=True, eq=False)
class CoefficientRule:
    """Closed-form coefficient generator ``l -> eta_l`` of a holomorphic germ.

    ``radius`` is a lower bound for the radius of convergence; ``inf``
    marks an entire function. ``degree`` is set for exact polynomials.
    """

    generator: Callable[[int], Scalar]
    radius: float = math.inf
    name: str = "custom"
    degree: Optional[int] = None

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise DomainError(f"radius of convergence must be positive, got {self.radius}")

    def coefficient(self, degree: int) -> complex:
        value = complex(self.generator(degree))
        if not (math.isfinite(value.real) and math.isfinite(value.imag)):
            raise EvaluationError(f"rule {self.name} produced a non-finite coefficient at {degree}")
        return value

    def jet(self, order: int = DEFAULT_ORDER) -> Jet:
        return Jet([self.coefficient(degree) for degree in range(order + 1)])

    @property
    def is_entire(self) -> bool:
        return math.isinf(self.radius)

    @classmethod
    def polynomial(cls, coeffs: Sequence[Scalar], name: str = "polynomial") -> "CoefficientRule":
        values = tuple(complex(c) for c in coeffs)
        nonzero = [i for i, c in enumerate(values) if c != 0]

        def generator(degree: int) -> complex:
            return values[degree] if degree < len(values) else 0.0

        return cls(generator, math.inf, name, nonzero[-1] if nonzero else -1)

    @classmethod
    def from_jet(cls, jet: Jet, radius: float = math.inf, name: str = "jet") -> "CoefficientRule":
        """Rule reproducing a jet; coefficients past its order are zero."""
        coeffs = jet.coeffs

        def generator(degree: int) -> complex:
            return complex(coeffs[degree]) if degree < coeffs.size else 0.0

        return cls(generator, radius, name, jet.degree if math.isinf(radius) else None)

    @classmethod
    def zero(cls) -> "CoefficientRule":
        return cls.polynomial([0.0], name="zero")

    @classmethod
    def monomial(cls, degree: int, coefficient: Scalar = 1.0) -> "CoefficientRule":
        coeffs = [0.0] * degree + [coefficient]
        return cls.polynomial(coeffs, name=f"monomial[{degree}]")

    @classmethod
    def exponential(cls, scale: Scalar = 1.0) -> "CoefficientRule":
        """``exp(scale * u)``."""
        s = complex(scale)
        return cls(lambda l: s**l / math.factorial(l), math.inf, f"exp[{s}]")

    @classmethod
    def geometric(cls, ratio: Scalar) -> "CoefficientRule":
        """``1 / (1 - ratio * u)``, convergent on ``|u| < 1/|ratio|``."""
        r = complex(ratio)
        radius = math.inf if r == 0 else 1.0 / abs(r)
        return cls(lambda l: r**l, radius, f"geometric[{r}]")

    @classmethod
    def named(cls, name: str, **params: Scalar) -> "CoefficientRule":
        """Build one of the rules configs can refer to by name."""
        builders = {
            "zero": lambda: cls.zero(),
            "exp": lambda: cls.exponential(params.get("scale", 1.0)),
            "geometric": lambda: cls.geometric(params.get("ratio", 1.0)),
            "monomial": lambda: cls.monomial(
                _monomial_degree(params.get("degree", 2)), params.get("coefficient", 1.0)
            ),
        }
        if name not in builders:
            raise DomainError(f"unknown coefficient rule: {name}")
        return builders[name]()


SeriesLike = Union[CoefficientRule, Jet]


def _jet_of(h: SeriesLike, order: int) -> Jet:
    if isinstance(h, Jet):
        if order > h.order:
            raise DomainError(
                f"jet of order {h.order} does not determine degree {order} coefficients"
            )
        return h.with_order(order)
    return h.jet(order)


def truncate(h: SeriesLike, N: int, K: Optional[int] = None) -> Jet:
    """Polynomial truncation keeping the degrees strictly below ``N``.

    Args:
        h (SeriesLike): Rule or jet to truncate
        N (int): Truncation degree, ``N >= 1``
        K (Optional[int]): Order of the returned jet; defaults to the jet's
            own order or ``DEFAULT_ORDER`` for rules

    Returns:
        Jet: ``eta_0 + ... + eta_{N-1} u^{N-1}`` at order ``max(K, N - 1)``
    """
    if N < 1:
        raise DomainError(f"truncation degree must be >= 1, got {N}")
    if K is None:
        K = h.order if isinstance(h, Jet) else DEFAULT_ORDER
    if isinstance(h, Jet):
        # degrees past the order of a jet are zero in its polynomial part
        return h.with_order(max(K, N - 1)).truncate(N)
    return h.jet(max(K, N - 1)).truncate(N)


def remainder(h: SeriesLike, N: int, K: int) -> Jet:
    """``sum_{l=N}^{K} eta_l u^l`` as a jet of order ``K``."""
    if N < 1:
        raise DomainError(f"truncation degree must be >= 1, got {N}")
    if K < N:
        raise DomainError(f"remainder order K={K} must be >= N={N}")
    return _jet_of(h, K).tail(N)


def arg_scale(j: Jet, factor: Scalar) -> Jet:
    return j.arg_scale(factor)


def evaluate(j: Jet, z):
    return j(z)


def add(a: Jet, b: Jet) -> Jet:
    return a + b


def mul(a: Jet, b: Jet) -> Jet:
    return a * b


def compose(a: Jet, b: Jet, recenter: bool = False) -> Jet:
    return a.compose(b, recenter=recenter)
