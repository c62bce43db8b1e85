"""Smooth projective surface backend: Néron–Severi lattice + Zariski decomposition.

The user declares the intersection form, the negative curves relevant to the
explored region, and extra `sample_curves` certifying nefness.  Wrong or
incomplete curve lists give wrong volumes; the bundled del Pezzo / Hirzebruch
models carry the full known lists.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .core import (
    BasisMismatchError,
    ConvergenceError,
    DivisorClass,
    GeometryError,
    GeometryModel,
    NotPseudoeffectiveError,
    Valuation,
    as_fraction,
)


@dataclass(frozen=True)
class SurfaceRealization:
    """Where a surface valuation's order function is computed.

    `model` is the (possibly birational) surface carrying the prime divisor,
    `divisor` its class there, and `pullback` the rational matrix sending
    base-lattice coordinates to `model`'s lattice (None = identity, i.e. the
    valuation is realised on the base surface itself).
    """

    model: "SurfaceModel"
    divisor: DivisorClass
    base_id: str
    pullback: Optional[tuple[tuple[Fraction, ...], ...]] = None


@dataclass(frozen=True)
class ZariskiDecomposition:
    positive_part: DivisorClass
    negative_part: tuple[tuple[DivisorClass, Fraction], ...]


class SurfaceModel(GeometryModel):
    dimension = 2

    def __init__(
        self,
        name: str,
        intersection_matrix: Sequence[Sequence],
        negative_curves: Sequence[Sequence] = (),
        canonical_class: Sequence = None,
        sample_curves: Sequence[Sequence] = (),
    ):
        self.name = name
        self.matrix = tuple(
            tuple(as_fraction(x) for x in row) for row in intersection_matrix
        )
        self.class_rank = len(self.matrix)
        for row in self.matrix:
            if len(row) != self.class_rank:
                raise GeometryError("intersection matrix is not square")
        for i in range(self.class_rank):
            for j in range(self.class_rank):
                if self.matrix[i][j] != self.matrix[j][i]:
                    raise GeometryError("intersection matrix is not symmetric")
        self._check_signature()

        self.negative_curves = tuple(self.divisor(c) for c in negative_curves)
        for C in self.negative_curves:
            if self.pairing(C, C) >= 0:
                raise GeometryError(
                    f"declared negative curve {C.coefficients} has self-intersection >= 0"
                )
        self.sample_curves = tuple(self.divisor(c) for c in sample_curves)
        if canonical_class is None:
            canonical_class = [0] * self.class_rank
        self.canonical_class = self.divisor(canonical_class)
        self.named_valuations: dict[str, Valuation] = {}

        self._np_matrix = np.array(
            [[float(x) for x in row] for row in self.matrix], dtype=float
        )
        self._curve_vecs = [
            np.array([float(x) for x in C.coefficients]) for C in self.negative_curves
        ]
        self._check_vecs = self._curve_vecs + [
            np.array([float(x) for x in C.coefficients]) for C in self.sample_curves
        ]

    def _check_signature(self):
        eig = np.linalg.eigvalsh(
            np.array([[float(x) for x in row] for row in self.matrix])
        )
        pos = int(np.sum(eig > 1e-9))
        neg = int(np.sum(eig < -1e-9))
        if pos != 1 or neg != self.class_rank - 1:
            raise GeometryError(
                f"intersection form has signature ({pos}, {neg}); "
                f"expected (1, {self.class_rank - 1})"
            )

    # -- exact pairing and Zariski decomposition ---------------------------

    def pairing(self, A: DivisorClass, B: DivisorClass) -> Fraction:
        self._check_basis(A)
        self._check_basis(B)
        total = Fraction(0)
        for i, a in enumerate(A.coefficients):
            if a == 0:
                continue
            row = self.matrix[i]
            total += a * sum(row[j] * b for j, b in enumerate(B.coefficients) if b != 0)
        return total

    def add_valuation(self, v: Valuation) -> Valuation:
        self.named_valuations[v.name] = v
        return v

    def curve_valuation(self, name: str, curve_coeffs: Sequence, log_discrepancy=1) -> Valuation:
        """Valuation ord_C along a prime divisor C realised on this surface."""
        real = SurfaceRealization(self, self.divisor(curve_coeffs), base_id=self.basis_id)
        return self.add_valuation(Valuation(name, as_fraction(log_discrepancy), order_model=real))

    def zariski(self, D: DivisorClass) -> ZariskiDecomposition:
        """Unique decomposition D = P + N (P nef against the declared curves,
        negative-definite N-support orthogonal to P), by iterated support growth.
        """
        self._check_basis(D)
        support: list[int] = []
        coeffs: list[Fraction] = []
        curves = self.negative_curves
        while True:
            P = D
            for idx, a in zip(support, coeffs):
                P = P - a * curves[idx]
            violating = [
                i
                for i, C in enumerate(curves)
                if i not in support and self.pairing(P, C) < 0
            ]
            if not violating:
                break
            support.extend(violating)
            gram = [
                [self.pairing(curves[i], curves[j]) for j in support] for i in support
            ]
            rhs = [self.pairing(D, curves[i]) for i in support]
            sol = _solve_exact(gram, rhs)
            if sol is None or not _negative_definite(gram):
                raise NotPseudoeffectiveError(
                    f"no Zariski decomposition: Gram submatrix of curves "
                    f"{[curves[i].coefficients for i in support]} is not negative definite"
                )
            coeffs = sol
        for C in self.sample_curves:
            if self.pairing(P, C) < 0:
                raise NotPseudoeffectiveError(
                    f"candidate positive part pairs negatively with declared curve "
                    f"{C.coefficients}"
                )
        if any(a < 0 for a in coeffs):
            raise NotPseudoeffectiveError(
                "a negative-part coefficient is forced negative; class is not pseudoeffective"
            )
        negative = tuple(
            (curves[i], a) for i, a in zip(support, coeffs) if a > 0
        )
        return ZariskiDecomposition(P, negative)

    def volume(self, D: DivisorClass) -> Fraction:
        try:
            dec = self.zariski(D)
        except NotPseudoeffectiveError:
            return Fraction(0)
        return self.pairing(dec.positive_part, dec.positive_part)

    def positive_product_against(self, D: DivisorClass, H: DivisorClass) -> Fraction:
        """<D> . H = positive part of D paired with H.  Requires D big."""
        if not self.is_big(D):
            raise GeometryError("positive product requires a big class")
        dec = self.zariski(D)
        return self.pairing(dec.positive_part, H)

    # -- realization plumbing ---------------------------------------------

    def _self_realization(self, divisor: DivisorClass) -> SurfaceRealization:
        return SurfaceRealization(self, divisor, base_id=self.basis_id)

    def resolve_realization(self, valuations: Sequence[Valuation]):
        """Common birational model carrying all the given surface valuations.

        Returns (model, pull) with pull an exact linear map on coefficient
        tuples from this model's lattice into the realization lattice.
        """
        reals: list[SurfaceRealization] = []
        for v in valuations:
            if v.is_trivial:
                continue
            r = v.order_model
            if not isinstance(r, SurfaceRealization):
                raise GeometryError(f"valuation {v.name!r} is not a surface valuation")
            if r.base_id != self.basis_id:
                raise BasisMismatchError(
                    f"valuation {v.name!r} is declared over base {r.base_id!r}, "
                    f"not {self.basis_id!r}"
                )
            reals.append(r)
        if not reals:
            return self, lambda coeffs: coeffs
        models = {id(r.model) for r in reals}
        if len(models) > 1:
            raise GeometryError(
                "valuations realised on different birational models cannot be combined"
            )
        target = reals[0].model
        mats = {r.pullback for r in reals}
        if len(mats) > 1:
            raise GeometryError("inconsistent pullback maps among valuations")
        mat = reals[0].pullback
        if mat is None:
            if target is not self:
                raise GeometryError("missing pullback map to the realization model")
            return self, lambda coeffs: coeffs

        def pull(coeffs):
            return tuple(
                sum(row[j] * c for j, c in enumerate(coeffs)) for row in mat
            )

        return target, pull

    def twisted_volume(self, L: DivisorClass, constraints):
        self._check_basis(L)
        vals = [v for v, _ in constraints]
        target, pull = self.resolve_realization(vals)
        cls = DivisorClass.make(pull(L.coefficients), target.basis_id)
        for v, c in constraints:
            if v.is_trivial:
                raise GeometryError("trivial valuation cannot twist a class")
            cls = cls - as_fraction(c) * v.order_model.divisor
        return target.volume(cls)

    def twist_evaluator(self, L, valuations):
        target, pull = self.resolve_realization(valuations)
        base = np.array([float(x) for x in pull(L.coefficients)])
        divs = []
        for v in valuations:
            if v.is_trivial:
                divs.append(np.zeros_like(base))
            else:
                divs.append(
                    np.array([float(x) for x in v.order_model.divisor.coefficients])
                )

        def evaluate(cs: Sequence[float]) -> float:
            vec = base.copy()
            for c, dvec in zip(cs, divs):
                if c:
                    vec -= c * dvec
            return target.volume_float(vec)

        return evaluate

    # -- float fast path ---------------------------------------------------

    def positive_part_float(self, vec: np.ndarray) -> Optional[np.ndarray]:
        """Float Zariski positive part, or None when not pseudoeffective."""
        dec = self._zariski_float(vec)
        return None if dec is None else dec[0]

    def _zariski_float(self, vec: np.ndarray):
        """(P, support indices, coefficients) or None when not pseudoeffective."""
        M = self._np_matrix
        curves = self._curve_vecs
        support: list[int] = []
        coeffs = np.zeros(0)
        scale = max(1.0, float(np.max(np.abs(vec))))
        tol = 1e-11 * scale
        while True:
            P = vec.copy()
            for idx, a in zip(support, coeffs):
                P -= a * curves[idx]
            MP = M @ P
            violating = [
                i
                for i, C in enumerate(curves)
                if i not in support and C @ MP < -tol
            ]
            if not violating:
                break
            support.extend(violating)
            vecs = [curves[i] for i in support]
            gram = np.array([[u @ M @ w for w in vecs] for u in vecs])
            rhs = np.array([vec @ M @ u for u in vecs])
            try:
                coeffs = np.linalg.solve(gram, rhs)
            except np.linalg.LinAlgError:
                return None
            if np.max(np.linalg.eigvalsh(gram)) > -1e-12:
                return None
        MP = M @ P
        for C in self._check_vecs:
            if C @ MP < -tol:
                return None
        if len(coeffs) and np.min(coeffs) < -tol:
            return None
        return P, support, coeffs

    def volume_float(self, vec: np.ndarray) -> float:
        P = self.positive_part_float(vec)
        if P is None:
            return 0.0
        v = float(P @ self._np_matrix @ P)
        return v if v > 0.0 else 0.0

    def _line_integrals(self, b, d, x0, x1, hvec):
        """Integrals of vol(b + x d) and P_x . h over [x0, x1], by chamber walking.

        The positive part is linear in x on each chamber, so vol is quadratic
        and both integrals are closed-form per chamber.  Assumes vol stays 0
        past the first non-pseudoeffective point (true when -d is effective);
        returns (vol_integral, h_integral, reached_end).
        """
        M = self._np_matrix
        curves = self._curve_vecs
        checks = self._check_vecs
        total_v = 0.0
        total_h = 0.0
        span = x1 - x0
        if span <= 0:
            return 0.0, 0.0, True
        eps = 1e-12 * max(1.0, abs(x0), abs(x1))
        x = x0
        guard = 0
        while x < x1 - eps:
            guard += 1
            if guard > 64:
                raise ConvergenceError("chamber walk failed to terminate")
            probe = min(x + 1e-9 * span, 0.5 * (x + x1))
            vec = b + probe * d
            dec = self._zariski_float(vec)
            if dec is None:
                return total_v, total_h, False
            _, sup, coeffs = dec
            support = [i for i, a in zip(sup, coeffs) if a > 1e-12]
            # linear-in-x negative-part coefficients on this chamber
            if support:
                vecs = [curves[i] for i in support]
                gram = np.array([[u @ M @ w for w in vecs] for u in vecs])
                u = np.linalg.solve(gram, np.array([b @ M @ c for c in vecs]))
                v = np.linalg.solve(gram, np.array([d @ M @ c for c in vecs]))
                p0 = b - sum(ui * ci for ui, ci in zip(u, vecs))
                p1 = d - sum(vi * ci for vi, ci in zip(v, vecs))
            else:
                u = v = np.zeros(0)
                p0, p1 = b, d
            # next wall: a coefficient or an off-support pairing hits zero
            wall = x1
            for ui, vi in zip(u, v):
                r = _linear_root(ui, vi, x, x1, eps)
                if r is not None:
                    wall = min(wall, r)
            Mp0, Mp1 = M @ p0, M @ p1
            for i, C in enumerate(checks):
                if i < len(curves) and i in support:
                    continue
                r = _linear_root(float(C @ Mp0), float(C @ Mp1), x, x1, eps)
                if r is not None:
                    wall = min(wall, r)
            q0 = float(p0 @ Mp0)
            q1 = 2.0 * float(p0 @ Mp1)
            q2 = float(p1 @ Mp1)
            total_v += (
                q0 * (wall - x)
                + q1 * (wall * wall - x * x) / 2.0
                + q2 * (wall**3 - x**3) / 3.0
            )
            if hvec is not None:
                h0 = float(p0 @ (M @ hvec))
                h1 = float(p1 @ (M @ hvec))
                total_h += h0 * (wall - x) + h1 * (wall * wall - x * x) / 2.0
            x = wall
        return total_v, total_h, True

    def twist_integrals(self, L, valuations, shifts, lam0, lam1, direction=None):
        """Exact integrals along lam -> L - sum max(lam - t_i, 0) D_i over [lam0, lam1].

        Returns (integral of vol, integral of P . direction); the second is 0
        when no direction is given.  Stops early once the path leaves the
        pseudoeffective cone (vol is then identically 0 onward).
        """
        target, pull = self.resolve_realization(valuations)
        base = np.array([float(x) for x in pull(L.coefficients)])
        hvec = None
        if direction is not None:
            hvec = np.array([float(x) for x in pull(direction.coefficients)])
        divs = []
        ts = []
        for vv, t in zip(valuations, shifts):
            if vv.is_trivial:
                continue
            divs.append(
                np.array([float(x) for x in vv.order_model.divisor.coefficients])
            )
            ts.append(float(t))
        cuts = sorted({lam0, lam1} | {t for t in ts if lam0 < t < lam1})
        total_v = 0.0
        total_h = 0.0
        for p, q in zip(cuts, cuts[1:]):
            active = [i for i, t in enumerate(ts) if t <= p + 1e-15]
            b = base.copy()
            d = np.zeros_like(base)
            for i in active:
                b += ts[i] * divs[i]
                d -= divs[i]
            iv, ih, alive = target._line_integrals(b, d, p, q, hvec)
            total_v += iv
            total_h += ih
            if not alive:
                break
        return total_v, total_h


def _linear_root(c0: float, c1: float, x: float, x1: float, eps: float):
    """Root of c0 + c1 t strictly inside (x, x1), or None."""
    if abs(c1) < 1e-14:
        return None
    r = -c0 / c1
    if x + eps < r < x1 - eps:
        return r
    return None


def _solve_exact(gram, rhs) -> Optional[list[Fraction]]:
    """Gaussian elimination over the rationals; None when singular."""
    n = len(gram)
    aug = [list(row) + [rhs[i]] for i, row in enumerate(gram)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            return None
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = aug[col][col]
        aug[col] = [x / inv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [aug[i][n] for i in range(n)]


def _negative_definite(gram) -> bool:
    """Sylvester criterion: (-1)^k det_k > 0 for leading principal minors."""
    n = len(gram)
    for k in range(1, n + 1):
        det = _det_exact([row[:k] for row in gram[:k]])
        if ((-1) ** k) * det <= 0:
            return False
    return True


def _det_exact(m) -> Fraction:
    n = len(m)
    m = [list(row) for row in m]
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = -det
        det *= m[col][col]
        inv = m[col][col]
        for r in range(col + 1, n):
            if m[r][col] != 0:
                f = m[r][col] / inv
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return det


def zariski(model: SurfaceModel, D: DivisorClass) -> ZariskiDecomposition:
    return model.zariski(D)


def volume(model: SurfaceModel, D: DivisorClass) -> Fraction:
    return model.volume(D)


def positive_product_against(model: SurfaceModel, D: DivisorClass, H: DivisorClass) -> Fraction:
    return model.positive_product_against(D, H)
