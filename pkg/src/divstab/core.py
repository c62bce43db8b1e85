"""Divisor-class arithmetic and the volume-oracle contract shared by all backends.

Class coordinates and intersection-theoretic quantities are exact rationals
(`fractions.Fraction`); only integrals, suprema over shift vectors, and
bisection thresholds use floating point, each with an explicit tolerance.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence


class GeometryError(Exception):
    """A query that is geometrically ill-posed (not big, bad model data, ...)."""


class BasisMismatchError(GeometryError):
    """Divisor classes from different class lattices were combined."""


class NotPseudoeffectiveError(GeometryError):
    """No valid Zariski decomposition / empty section polytope region."""


class ConvergenceError(Exception):
    """An iterative numerical routine failed to meet its tolerance."""


def as_fraction(x) -> Fraction:
    """Coerce ints, Fractions and 'p/q' strings to an exact rational."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        # floats are binary rationals; the conversion is exact
        return Fraction(x)
    raise TypeError(f"cannot interpret {x!r} as an exact rational")


@dataclass(frozen=True)
class DivisorClass:
    """A rational class in a declared numerical basis of divisor classes."""

    coefficients: tuple[Fraction, ...]
    basis_id: str

    @staticmethod
    def make(coeffs: Sequence, basis_id: str) -> "DivisorClass":
        return DivisorClass(tuple(as_fraction(c) for c in coeffs), basis_id)

    @property
    def rank(self) -> int:
        return len(self.coefficients)

    def _check(self, other: "DivisorClass") -> None:
        if self.basis_id != other.basis_id:
            raise BasisMismatchError(
                f"classes live in different lattices: {self.basis_id!r} vs {other.basis_id!r}"
            )
        if len(self.coefficients) != len(other.coefficients):
            raise BasisMismatchError("class lattice ranks differ")

    def __add__(self, other: "DivisorClass") -> "DivisorClass":
        self._check(other)
        return DivisorClass(
            tuple(a + b for a, b in zip(self.coefficients, other.coefficients)),
            self.basis_id,
        )

    def __sub__(self, other: "DivisorClass") -> "DivisorClass":
        self._check(other)
        return DivisorClass(
            tuple(a - b for a, b in zip(self.coefficients, other.coefficients)),
            self.basis_id,
        )

    def __neg__(self) -> "DivisorClass":
        return DivisorClass(tuple(-a for a in self.coefficients), self.basis_id)

    def scale(self, c) -> "DivisorClass":
        c = as_fraction(c)
        return DivisorClass(tuple(c * a for a in self.coefficients), self.basis_id)

    def __rmul__(self, c) -> "DivisorClass":
        return self.scale(c)

    def is_zero(self) -> bool:
        return all(a == 0 for a in self.coefficients)


@dataclass(frozen=True)
class Valuation:
    """A named divisorial valuation with a computable vanishing-order model.

    `order_model` is backend specific: a :class:`SurfaceRealization` for
    surface valuations, a primitive lattice vector (tuple of ints) for
    monomial valuations on a toric model, and ``None`` for the trivial
    valuation.
    """

    name: str
    log_discrepancy: Fraction
    is_trivial: bool = False
    order_model: object = None

    def __post_init__(self):
        object.__setattr__(self, "log_discrepancy", as_fraction(self.log_discrepancy))
        if self.log_discrepancy < 0:
            raise GeometryError(f"log discrepancy of {self.name!r} is negative")
        if self.is_trivial and self.log_discrepancy != 0:
            raise GeometryError("the trivial valuation has log discrepancy 0")


TRIVIAL_VALUATION = Valuation("trivial", Fraction(0), is_trivial=True)


@dataclass(frozen=True)
class DivisorialMeasure:
    """Finitely many (valuation, mass) atoms with masses summing to one."""

    atoms: tuple[tuple[Valuation, Fraction], ...]

    @staticmethod
    def make(pairs: Sequence[tuple[Valuation, object]]) -> "DivisorialMeasure":
        return DivisorialMeasure(tuple((v, as_fraction(m)) for v, m in pairs))

    def __post_init__(self):
        total = Fraction(0)
        seen = set()
        for v, m in self.atoms:
            if m < 0 or m > 1:
                raise GeometryError(f"mass {m} of {v.name!r} outside [0, 1]")
            if v.name in seen:
                raise GeometryError(f"valuation {v.name!r} repeated in measure")
            seen.add(v.name)
            total += m
        if total != 1:
            raise GeometryError(f"masses sum to {total}, expected 1")

    @property
    def support(self) -> tuple[Valuation, ...]:
        return tuple(v for v, _ in self.atoms)

    @property
    def masses(self) -> tuple[Fraction, ...]:
        return tuple(m for _, m in self.atoms)


class GeometryModel(ABC):
    """Abstract volume oracle against a concrete variety model."""

    name: str
    dimension: int
    class_rank: int
    canonical_class: DivisorClass
    named_valuations: dict[str, Valuation]

    @property
    def basis_id(self) -> str:
        return self.name

    def divisor(self, coeffs: Sequence) -> DivisorClass:
        return DivisorClass.make(coeffs, self.basis_id)

    @abstractmethod
    def volume(self, D: DivisorClass) -> Fraction:
        """vol(D) as an exact rational; 0 off the pseudoeffective cone."""

    @abstractmethod
    def twisted_volume(self, L: DivisorClass, constraints: Sequence[tuple[Valuation, object]]):
        """vol of L twisted down by the given (valuation, coefficient) pairs.

        Exact when every coefficient is rational; trivial valuations are not
        allowed here (they constrain nothing and are handled upstream).
        """

    @abstractmethod
    def twist_evaluator(
        self, L: DivisorClass, valuations: Sequence[Valuation]
    ) -> Callable[[Sequence[float]], float]:
        """Fast float-valued closure c -> vol(L twisted by coefficients c).

        Used inside quadrature and optimisation loops where exactness is not
        required; the exact path stays available through `twisted_volume`.
        """

    def is_big(self, D: DivisorClass) -> bool:
        return self.volume(D) > 0

    def _check_basis(self, D: DivisorClass) -> None:
        if D.basis_id != self.basis_id:
            raise BasisMismatchError(
                f"class in lattice {D.basis_id!r} queried against model {self.basis_id!r}"
            )


def is_big(model: GeometryModel, D: DivisorClass) -> bool:
    """True iff vol(D) > 0."""
    return model.is_big(D)


def _fraction_sqrt(x: Fraction) -> Optional[Fraction]:
    """Exact square root of a nonnegative rational, or None."""
    if x < 0:
        return None
    n, d = x.numerator, x.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


# cache of thresholds, keyed by (model id, L coefficients, valuation name)
_GAMMA_CACHE: dict[tuple, object] = {}


def gamma_threshold(
    model: GeometryModel,
    L: DivisorClass,
    v: Valuation,
    tol: float = 1e-9,
    exact: bool = True,
):
    """Pseudoeffective threshold sup{g > 0 : twist(L, v, g) is big}.

    Bisection on bigness down to `tol`, followed (when `exact` is set and the
    volume is locally polynomial of degree <= 2 in g) by an exact root solve;
    returns a Fraction in that case and a float otherwise.
    """
    if v.is_trivial:
        raise GeometryError("pseudoeffective threshold undefined for the trivial valuation")
    key = (id(model), L.coefficients, v.name, bool(exact))
    hit = _GAMMA_CACHE.get(key)
    if hit is not None:
        return hit
    if not model.is_big(L):
        raise GeometryError("pseudoeffective threshold requires a big class")

    # float bracketing; the exact refinement below re-verifies with rationals
    evaluator = model.twist_evaluator(L, [v])

    def big(g) -> bool:
        return evaluator([float(g)]) > 0

    hi = Fraction(1)
    while big(hi):
        hi *= 2
        if hi > 2**40:
            raise ConvergenceError(f"threshold of {v.name!r} appears unbounded")
    lo = Fraction(0)
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if big(mid):
            lo = mid
        else:
            hi = mid

    result = float((lo + hi) / 2)
    if exact:
        refined = _exact_threshold(model, L, v, lo, hi)
        if refined is not None:
            result = refined
    _GAMMA_CACHE[key] = result
    return result


def _exact_threshold(model, L, v, lo: Fraction, hi: Fraction) -> Optional[Fraction]:
    """Fit the volume's polynomial piece just below the bracket and solve it.

    Only attempted for models of dimension <= 2, where the piece is at most
    quadratic.  Returns None when the fit cannot be certified.
    """
    if model.dimension > 2:
        return None
    width = hi - lo
    samples = [lo - k * width for k in (1, 2, 3)]
    if samples[-1] < 0:
        return None
    vols = [model.twisted_volume(L, [(v, s)]) for s in samples]
    x0, x1, x2 = samples
    y0, y1, y2 = vols
    # exact quadratic through three points (divided differences)
    d01 = (y1 - y0) / (x1 - x0)
    d12 = (y2 - y1) / (x2 - x1)
    a = (d12 - d01) / (x2 - x0)
    b = d01 - a * (x0 + x1)
    c = y0 - a * x0 * x0 - b * x0
    roots: list[Fraction] = []
    if a == 0:
        if b != 0:
            roots = [-c / b]
    else:
        disc = b * b - 4 * a * c
        r = _fraction_sqrt(disc)
        if r is None:
            return None
        roots = [(-b + r) / (2 * a), (-b - r) / (2 * a)]
    for root in roots:
        if lo - width <= root <= hi + width:
            if model.twisted_volume(L, [(v, root)]) == 0:
                return root
    return None
