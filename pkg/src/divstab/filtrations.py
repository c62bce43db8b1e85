"""Divisorial filtrations of section rings.

A filtration is a finite valuation support plus a shift vector t; its key
invariant is the expected vanishing order

    S(t) = t0 + vol(L)^{-1} Integral_{t0}^{lam_max} vol(L - Sum max(lam - t_i, 0) E_i) dlam

with t0 = min t_i and lam_max = min_i (gamma_i + t_i).  The same quantity is
approximated at finite level k from jumping numbers of the monomial basis on
toric models.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .core import GeometryError, GeometryModel, DivisorClass, Valuation, gamma_threshold
from .quadrature import integrate
from .toric import ToricModel


@dataclass(frozen=True)
class FiltrationSpec:
    """Support valuations and shifts t, one shift per valuation."""

    support: tuple[Valuation, ...]
    shifts: tuple[float, ...]

    @staticmethod
    def make(pairs: Sequence[tuple[Valuation, object]]) -> "FiltrationSpec":
        return FiltrationSpec(
            tuple(v for v, _ in pairs), tuple(t for _, t in pairs)
        )

    def __post_init__(self):
        if not self.support:
            raise GeometryError("filtration support is empty")
        if len(self.support) != len(self.shifts):
            raise GeometryError("support and shift vector lengths differ")
        names = [v.name for v in self.support]
        if len(set(names)) != len(names):
            raise GeometryError("filtration support contains repeated valuations")

    def shifted(self, offset) -> "FiltrationSpec":
        return FiltrationSpec(self.support, tuple(t + offset for t in self.shifts))


@dataclass(frozen=True)
class JumpingProfile:
    """Sorted jumping values at level k and their normalized mean."""

    k: int
    jumping_values: tuple[float, ...]
    volume: float


def integration_range(
    model: GeometryModel, L: DivisorClass, spec: FiltrationSpec
):
    """(t0, lam_max, nontrivial (valuation, shift) pairs, threshold breakpoints).

    lam_max is the smallest level at which the twisted volume vanishes: the
    least gamma_i + t_i, capped by the trivial valuation's shift when present.
    """
    t0 = min(float(t) for t in spec.shifts)
    nontrivial = [
        (v, float(t)) for v, t in zip(spec.support, spec.shifts) if not v.is_trivial
    ]
    trivial_shift: Optional[float] = None
    for v, t in zip(spec.support, spec.shifts):
        if v.is_trivial:
            trivial_shift = float(t)
    if not nontrivial:
        return t0, t0, nontrivial, set()
    gammas = [float(gamma_threshold(model, L, v)) for v, _ in nontrivial]
    lam_max = min(g + t for g, (_, t) in zip(gammas, nontrivial))
    # the trivial valuation admits no section past its shift: hard cutoff
    if trivial_shift is not None:
        lam_max = min(lam_max, trivial_shift)
    breaks = {t for _, t in nontrivial} | {
        g + t for g, (_, t) in zip(gammas, nontrivial)
    }
    return t0, lam_max, nontrivial, breaks


def expected_order_S(
    model: GeometryModel,
    L: DivisorClass,
    spec: FiltrationSpec,
    tol: float = 1e-9,
    method: str = "auto",
) -> float:
    """Expected vanishing order of L along the filtration; translation equivariant.

    Surfaces integrate the piecewise-quadratic volume exactly chamber by
    chamber; other backends (or method="quadrature") use adaptive composite
    Gauss-Legendre seeded at the shift and threshold breakpoints.
    """
    vol_L = model.volume(L)
    if vol_L <= 0:
        raise GeometryError("expected vanishing order requires a big class")
    t0, lam_max, nontrivial, breaks = integration_range(model, L, spec)
    if not nontrivial or lam_max <= t0:
        return t0

    shifts = [t for _, t in nontrivial]
    if method == "auto" and hasattr(model, "twist_integrals"):
        iv, _ = model.twist_integrals(
            L, [v for v, _ in nontrivial], shifts, t0, lam_max
        )
        return t0 + iv / float(vol_L)

    evaluator = model.twist_evaluator(L, [v for v, _ in nontrivial])

    def integrand(lam: float) -> float:
        return evaluator([max(lam - t, 0.0) for t in shifts])

    value = integrate(integrand, t0, lam_max, breaks, tol=tol)
    return t0 + value / float(vol_L)


def _require_toric(model) -> ToricModel:
    if not isinstance(model, ToricModel):
        raise GeometryError("finite-level jumping numbers need a toric model")
    return model


def _jumping_values(model: ToricModel, L, spec: FiltrationSpec, k: int, basis):
    values = []
    for m in basis:
        lam = min(
            float(model.monomial_order(L, k, v, m)) + k * float(t)
            for v, t in zip(spec.support, spec.shifts)
        )
        values.append(lam)
    return values


def filtration_volume_finite_k(
    model: GeometryModel, L: DivisorClass, spec: FiltrationSpec, k: int
) -> JumpingProfile:
    """Jumping numbers of the level-k sections; k^{-1} volume converges to S."""
    toric = _require_toric(model)
    basis = toric.section_basis(L, k)
    if not basis:
        raise GeometryError("no sections at this level")
    values = sorted(_jumping_values(toric, L, spec, k, basis), reverse=True)
    return JumpingProfile(k, tuple(values), sum(values) / len(values))


def d_infinity(
    model: GeometryModel,
    L: DivisorClass,
    spec_a: FiltrationSpec,
    spec_b: FiltrationSpec,
    k: int,
) -> float:
    """Max gap of jumping values over the shared monomial basis at level k."""
    toric = _require_toric(model)
    basis = toric.section_basis(L, k)
    if not basis:
        raise GeometryError("no sections at this level")
    va = _jumping_values(toric, L, spec_a, k, basis)
    vb = _jumping_values(toric, L, spec_b, k, basis)
    return max(abs(a - b) for a, b in zip(va, vb))


def restriction_inequality_check(
    model: GeometryModel,
    L: DivisorClass,
    superset_spec: FiltrationSpec,
    subset_support: Sequence[Valuation],
    tol: float = 1e-9,
) -> tuple[bool, tuple[float, float]]:
    """Dropping constraints can only increase the expected order.

    Returns (holds, (value with full support, value with the subset)).
    """
    by_name = {v.name: (v, t) for v, t in zip(superset_spec.support, superset_spec.shifts)}
    pairs = []
    for v in subset_support:
        if v.name not in by_name:
            raise GeometryError(f"valuation {v.name!r} is not in the filtration support")
        pairs.append(by_name[v.name])
    sub_spec = FiltrationSpec.make(pairs)
    full = expected_order_S(model, L, superset_spec, tol=tol)
    sub = expected_order_S(model, L, sub_spec, tol=tol)
    return full <= sub + tol, (full, sub)
