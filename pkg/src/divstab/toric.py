"""Smooth projective toric backend: rational section polytopes + monomial valuations.

Divisor classes are ray-coefficient vectors a_rho; the section polytope is
P_D = {m : <m, v_rho> >= -a_rho}.  Volumes are n! times the Euclidean volume
of P_D, computed by exact vertex enumeration and triangulation.  Valuations
are monomial: primitive lattice vectors w, whose order function is linear on
the monomial basis, anchored so that min over P_L is order 0.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction
from functools import cmp_to_key
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .core import (
    DivisorClass,
    GeometryError,
    GeometryModel,
    Valuation,
    as_fraction,
)


def _solve(matrix, rhs) -> Optional[list[Fraction]]:
    """Exact rational linear solve; None when singular."""
    n = len(matrix)
    aug = [list(row) + [rhs[i]] for i, row in enumerate(matrix)]
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


def _det(m) -> Fraction:
    n = len(m)
    m = [list(map(Fraction, row)) for row in m]
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = -det
        det *= m[col][col]
        for r in range(col + 1, n):
            if m[r][col] != 0:
                f = m[r][col] / m[col][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return det


# rational approximations of irrational cut levels are capped at this denominator
_CUT_DENOMINATOR = 10**12


def _rationalize(c) -> Fraction:
    if isinstance(c, float):
        return Fraction(c).limit_denominator(_CUT_DENOMINATOR)
    return as_fraction(c)


class ToricModel(GeometryModel):
    """A smooth complete fan declared by its rays; divisors by ray coefficients."""

    def __init__(self, name: str, rays: Sequence[Sequence[int]]):
        self.name = name
        self.rays = tuple(tuple(int(x) for x in r) for r in rays)
        if not self.rays:
            raise GeometryError("a toric model needs at least one ray")
        self.dimension = len(self.rays[0])
        for r in self.rays:
            if len(r) != self.dimension:
                raise GeometryError("rays of mixed dimension")
            if math.gcd(*(abs(x) for x in r)) != 1:
                raise GeometryError(f"ray {r} is not primitive")
        self.class_rank = len(self.rays)
        self._check_complete()
        # -K has coefficient 1 on every ray
        self.canonical_class = self.divisor([-1] * self.class_rank)
        self.named_valuations: dict[str, Valuation] = {}
        self._vertex_cache: dict[tuple, tuple] = {}
        self._anchor_cache: dict[tuple, Fraction] = {}

    def _check_complete(self):
        """Section polytopes are bounded iff the rays positively span the lattice."""
        A_ub = -np.array(self.rays, dtype=float)
        b_ub = np.zeros(len(self.rays))
        for i in range(self.dimension):
            for sign in (1.0, -1.0):
                c = np.zeros(self.dimension)
                c[i] = -sign
                res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=(None, None))
                if res.status == 3:
                    raise GeometryError(
                        "rays do not positively span the lattice; section polytopes unbounded"
                    )

    # -- valuations ---------------------------------------------------------

    def monomial_valuation(self, name: str, w: Sequence[int]) -> Valuation:
        w = tuple(int(x) for x in w)
        v = Valuation(name, self.log_discrepancy(w), order_model=w)
        self.named_valuations[name] = v
        return v

    def log_discrepancy(self, w: Sequence[int]) -> Fraction:
        """Sum of the coordinates of w in the smooth cone that contains it."""
        w = tuple(int(x) for x in w)
        for subset in itertools.combinations(range(len(self.rays)), self.dimension):
            mat = [[Fraction(self.rays[i][r]) for i in subset] for r in range(self.dimension)]
            if abs(_det(mat)) != 1:
                continue
            sol = _solve(mat, [Fraction(x) for x in w])
            if sol is not None and all(c >= 0 for c in sol):
                return sum(sol, Fraction(0))
        raise GeometryError(f"vector {w} lies in no declared smooth cone")

    # -- polytope machinery -------------------------------------------------

    def _halfspaces(self, D: DivisorClass):
        """Constraints <m, normal> >= rhs for the section polytope of D."""
        self._check_basis(D)
        return [
            ([Fraction(x) for x in ray], -a)
            for ray, a in zip(self.rays, D.coefficients)
        ]

    def _vertices(self, halfspaces) -> list[tuple[Fraction, ...]]:
        n = self.dimension
        verts: set[tuple[Fraction, ...]] = set()
        for subset in itertools.combinations(range(len(halfspaces)), n):
            mat = [halfspaces[i][0] for i in subset]
            rhs = [halfspaces[i][1] for i in subset]
            pt = _solve(mat, rhs)
            if pt is None:
                continue
            if all(
                sum(a * x for a, x in zip(normal, pt)) >= r
                for normal, r in halfspaces
            ):
                verts.add(tuple(pt))
        return sorted(verts)

    def polytope_vertices(self, D: DivisorClass) -> list[tuple[Fraction, ...]]:
        key = D.coefficients
        hit = self._vertex_cache.get(key)
        if hit is None:
            hit = tuple(self._vertices(self._halfspaces(D)))
            self._vertex_cache[key] = hit
        return list(hit)

    def _euclidean_volume(self, verts) -> Fraction:
        n = self.dimension
        if len(verts) <= n:
            return Fraction(0)
        if n == 1:
            return max(v[0] for v in verts) - min(v[0] for v in verts)
        if n == 2:
            return _polygon_area(verts)
        pts = np.array([[float(x) for x in v] for v in verts])
        if np.linalg.matrix_rank(pts - pts[0], tol=1e-9) < n:
            return Fraction(0)
        from scipy.spatial import Delaunay

        tri = Delaunay(pts)
        total = Fraction(0)
        fact = Fraction(math.factorial(n))
        for simplex in tri.simplices:
            p0 = verts[simplex[0]]
            mat = [
                [verts[i][r] - p0[r] for r in range(n)] for i in simplex[1:]
            ]
            total += abs(_det(mat)) / fact
        return total

    # -- GeometryModel contract --------------------------------------------

    def volume(self, D: DivisorClass) -> Fraction:
        verts = self.polytope_vertices(D)
        return math.factorial(self.dimension) * self._euclidean_volume(verts)

    def order_anchor(self, L: DivisorClass, w: Sequence[int]) -> Fraction:
        """min over P_L of <., w>; vanishing orders along w are measured from it."""
        key = (L.coefficients, tuple(w))
        hit = self._anchor_cache.get(key)
        if hit is None:
            verts = self.polytope_vertices(L)
            if not verts:
                raise GeometryError("empty section polytope has no order anchor")
            hit = min(
                sum(Fraction(a) * x for a, x in zip(w, v)) for v in verts
            )
            self._anchor_cache[key] = hit
        return hit

    def constrained_volume(self, L: DivisorClass, constraints) -> Fraction:
        """n! vol of P_L cut by <m, w_i> - min_{P_L}<., w_i> >= c_i."""
        halfspaces = self._halfspaces(L)
        for w, c in constraints:
            w = tuple(int(x) for x in w)
            anchor = self.order_anchor(L, w)
            halfspaces.append(([Fraction(x) for x in w], anchor + _rationalize(c)))
        verts = self._vertices(halfspaces)
        return math.factorial(self.dimension) * self._euclidean_volume(verts)

    def _valuation_vector(self, v: Valuation) -> tuple[int, ...]:
        w = v.order_model
        if not (isinstance(w, tuple) and all(isinstance(x, int) for x in w)):
            raise GeometryError(f"valuation {v.name!r} is not a monomial valuation")
        return w

    def twisted_volume(self, L: DivisorClass, constraints) -> Fraction:
        cuts = []
        for v, c in constraints:
            if v.is_trivial:
                raise GeometryError("trivial valuation cannot twist a class")
            cuts.append((self._valuation_vector(v), c))
        return self.constrained_volume(L, cuts)

    def twist_evaluator(self, L, valuations) -> Callable[[Sequence[float]], float]:
        if self.dimension == 2:
            return self._twist_evaluator_2d(L, valuations)

        vecs = [
            None if v.is_trivial else self._valuation_vector(v) for v in valuations
        ]

        def evaluate(cs: Sequence[float]) -> float:
            cuts = [
                (w, c) for w, c in zip(vecs, cs) if w is not None and c > 0
            ]
            return float(self.constrained_volume(L, cuts))

        return evaluate

    def _twist_evaluator_2d(self, L, valuations):
        # float polygon clipping; exact path stays available via twisted_volume
        base = _order_polygon(self.polytope_vertices(L))
        poly0 = [(float(x), float(y)) for x, y in base]
        cut_data = []
        for v in valuations:
            if v.is_trivial:
                cut_data.append(None)
                continue
            w = self._valuation_vector(v)
            anchor = float(self.order_anchor(L, w))
            cut_data.append((float(w[0]), float(w[1]), anchor))

        def evaluate(cs: Sequence[float]) -> float:
            poly = poly0
            for data, c in zip(cut_data, cs):
                if data is None or c <= 0:
                    continue
                wx, wy, anchor = data
                poly = _clip(poly, wx, wy, anchor + c)
                if len(poly) < 3:
                    return 0.0
            return 2.0 * _shoelace(poly)

        return evaluate

    # -- section rings ------------------------------------------------------

    def section_basis(self, L: DivisorClass, k: int) -> list[tuple[int, ...]]:
        """Lattice points of k P_L, the monomial basis of the degree-k sections."""
        if k <= 0:
            raise GeometryError("level k must be a positive integer")
        scaled = [tuple(k * x for x in v) for v in self.polytope_vertices(L)]
        if not scaled:
            return []
        coeffs = [k * a for a in L.coefficients]
        if any(c.denominator != 1 for c in coeffs):
            raise GeometryError(f"{k} L is not an integral class")
        lo = [math.ceil(min(v[i] for v in scaled)) for i in range(self.dimension)]
        hi = [math.floor(max(v[i] for v in scaled)) for i in range(self.dimension)]
        pts = []
        for m in itertools.product(*(range(a, b + 1) for a, b in zip(lo, hi))):
            if all(
                sum(r * x for r, x in zip(ray, m)) >= -a
                for ray, a in zip(self.rays, coeffs)
            ):
                pts.append(m)
        return pts

    def monomial_order(self, L: DivisorClass, k: int, v: Valuation, m: Sequence[int]) -> Fraction:
        """Vanishing order along v of the monomial section m at level k."""
        if v.is_trivial:
            return Fraction(0)
        w = self._valuation_vector(v)
        return sum(Fraction(a) * x for a, x in zip(w, m)) - k * self.order_anchor(L, w)


def _polygon_area(verts) -> Fraction:
    ordered = _order_polygon(verts)
    if len(ordered) < 3:
        return Fraction(0)
    area = Fraction(0)
    for (x0, y0), (x1, y1) in zip(ordered, ordered[1:] + ordered[:1]):
        area += x0 * y1 - x1 * y0
    return abs(area) / 2


def _order_polygon(verts):
    """Counterclockwise ordering of 2-d points by exact angular comparison."""
    verts = list(verts)
    if len(verts) < 3:
        return verts
    cx = sum(v[0] for v in verts) / len(verts)
    cy = sum(v[1] for v in verts) / len(verts)

    def half(p):
        dx, dy = p[0] - cx, p[1] - cy
        return 0 if (dy > 0 or (dy == 0 and dx > 0)) else 1

    def compare(p, q):
        hp, hq = half(p), half(q)
        if hp != hq:
            return -1 if hp < hq else 1
        cross = (p[0] - cx) * (q[1] - cy) - (q[0] - cx) * (p[1] - cy)
        if cross > 0:
            return -1
        if cross < 0:
            return 1
        return 0

    return sorted(verts, key=cmp_to_key(compare))


def _clip(poly, wx, wy, rhs):
    """Keep the part of the polygon with wx*x + wy*y >= rhs."""
    out = []
    n = len(poly)
    for i in range(n):
        px, py = poly[i]
        qx, qy = poly[(i + 1) % n]
        pin = wx * px + wy * py - rhs
        qin = wx * qx + wy * qy - rhs
        if pin >= 0:
            out.append((px, py))
            if qin < 0:
                s = pin / (pin - qin)
                out.append((px + s * (qx - px), py + s * (qy - py)))
        elif qin >= 0:
            s = pin / (pin - qin)
            out.append((px + s * (qx - px), py + s * (qy - py)))
    return out


def _shoelace(poly) -> float:
    area = 0.0
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        area += x0 * y1 - x1 * y0
    return abs(area) / 2.0


def polytope_volume(model: ToricModel, D: DivisorClass) -> Fraction:
    return model.volume(D)


def constrained_volume(model: ToricModel, L: DivisorClass, constraints) -> Fraction:
    return model.constrained_volume(L, constraints)


def section_basis(model: ToricModel, L: DivisorClass, k: int):
    return model.section_basis(L, k)
