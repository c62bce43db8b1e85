"""Adaptive composite Gauss-Legendre integration.

The integrands here are piecewise polynomial with kinks at known breakpoint
candidates (shift values and bigness thresholds), plus possible extra kinks
inside a piece (volume chamber crossings, interacting constraints); the
breakpoints seed the subdivision and bisection catches the rest.
"""
from __future__ import annotations

from typing import Callable, Iterable

import numpy as np

from .core import ConvergenceError

_NODE_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _nodes(order: int):
    hit = _NODE_CACHE.get(order)
    if hit is None:
        hit = np.polynomial.legendre.leggauss(order)
        _NODE_CACHE[order] = hit
    return hit


def _gauss(f: Callable[[float], float], a: float, b: float, order: int) -> float:
    x, w = _nodes(order)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return half * sum(wi * f(mid + half * xi) for xi, wi in zip(x, w))


def _adaptive(f, a, b, tol, order, depth):
    whole = _gauss(f, a, b, order)
    mid = 0.5 * (a + b)
    split = _gauss(f, a, mid, order) + _gauss(f, mid, b, order)
    if abs(split - whole) <= tol:
        return split
    if depth <= 0:
        raise ConvergenceError(
            f"quadrature on [{a}, {b}] did not reach tolerance {tol}"
        )
    return _adaptive(f, a, mid, tol / 2, order, depth - 1) + _adaptive(
        f, mid, b, tol / 2, order, depth - 1
    )


def integrate(
    f: Callable[[float], float],
    a: float,
    b: float,
    breakpoints: Iterable[float] = (),
    tol: float = 1e-9,
    order: int = 12,
    max_depth: int = 40,
) -> float:
    """Integral of f over [a, b], subdivided at the given interior breakpoints."""
    if b <= a:
        return 0.0
    cuts = sorted({a, b} | {p for p in breakpoints if a < p < b})
    total = 0.0
    for lo, hi in zip(cuts, cuts[1:]):
        share = max(tol * (hi - lo) / (b - a), 1e-300)
        total += _adaptive(f, lo, hi, share, order, max_depth)
    return total
