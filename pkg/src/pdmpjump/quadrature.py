"""Small numerical integration helpers.

Two rules live here: a recursive adaptive Simpson integrator for scalar
callables, and composite Gauss-Legendre rules used for L2 inner products on
[0, 1].
"""
from __future__ import annotations

from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .exceptions import ToleranceError

_MAX_DEPTH = 50


def adaptive_simpson(func: Callable[[float], float], a: float, b: float,
                     atol: float = 1e-10, max_depth: int = _MAX_DEPTH) -> float:
    """Integrate ``func`` over [a, b] with adaptive Simpson and Richardson correction."""
    if a == b:
        return 0.0
    fa, fb = func(a), func(b)
    m = 0.5 * (a + b)
    fm = func(m)
    whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0
    return _simpson_step(func, a, b, fa, fm, fb, whole, atol, max_depth)


def _simpson_step(func, a, b, fa, fm, fb, whole, atol, depth):
    m = 0.5 * (a + b)
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = func(lm), func(rm)
    left = (m - a) * (fa + 4.0 * flm + fm) / 6.0
    right = (b - m) * (fm + 4.0 * frm + fb) / 6.0
    delta = left + right - whole
    if abs(delta) <= 15.0 * atol:
        return left + right + delta / 15.0
    if depth <= 0:
        raise ToleranceError(f"adaptive Simpson did not converge on [{a}, {b}]")
    return (_simpson_step(func, a, m, fa, flm, fm, left, 0.5 * atol, depth - 1)
            + _simpson_step(func, m, b, fm, frm, fb, right, 0.5 * atol, depth - 1))


@lru_cache(maxsize=32)
def _gl_reference(order: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_legendre(order: int, breakpoints: Sequence[float] = (0.0, 1.0)
                   ) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule with ``order`` nodes on every panel.

    ``breakpoints`` must be increasing; each consecutive pair forms a panel.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    edges = np.asarray(breakpoints, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("breakpoints must be a strictly increasing sequence of length >= 2")
    ref_x, ref_w = _gl_reference(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * ref_x[None, :]).ravel()
    weights = (half[:, None] * ref_w[None, :]).ravel()
    return nodes, weights


def uniform_panels(a: float, b: float, count: int) -> np.ndarray:
    return np.linspace(a, b, max(1, int(count)) + 1)


def trapezoid(values: np.ndarray, grid: np.ndarray) -> float:
    """Plain trapezoid rule on a given grid."""
    values = np.asarray(values, dtype=float)
    dx = np.diff(grid)
    return float(np.sum(0.5 * dx * (values[1:] + values[:-1])))
