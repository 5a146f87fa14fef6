"""Orthonormal families of L2[0, 1].

Three families are available: Gram-Schmidt orthonormalised cubic splines
(truncated-power parametrisation), the trigonometric Fourier basis and
shifted Legendre polynomials.  All inner products use composite
Gauss-Legendre rules.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np

from .exceptions import DegeneracyError
from .quadrature import gauss_legendre, uniform_panels

DEFAULT_ORDER = 64
PIVOT_TOL = 1e-12
MAX_CONDITION = 1e14

ArrayFunc = Callable[[np.ndarray], np.ndarray]


def _as_points(s) -> np.ndarray:
    return np.atleast_1d(np.asarray(s, dtype=float))


@dataclass(frozen=True)
class RawBasis:
    """Linearly independent functions on [0, 1], evaluated pointwise.

    ``breakpoints`` marks where the functions lose smoothness; quadrature
    panels are placed between consecutive breakpoints.
    """

    functions: tuple[ArrayFunc, ...]
    labels: tuple[str, ...]
    breakpoints: tuple[float, ...] = (0.0, 1.0)
    order: int = DEFAULT_ORDER

    def __post_init__(self):
        if len(self.functions) != len(self.labels) or not self.functions:
            raise ValueError("functions and labels must be non-empty and of equal length")
        eig = np.linalg.eigvalsh(self.gram())
        if eig[0] <= eig[-1] / MAX_CONDITION:
            raise DegeneracyError(
                f"raw basis is numerically dependent (Gram condition {eig[-1] / max(eig[0], 1e-300):.3g})")

    def __len__(self) -> int:
        return len(self.functions)

    def __call__(self, s) -> np.ndarray:
        s = _as_points(s)
        return np.vstack([np.broadcast_to(f(s), s.shape) for f in self.functions])

    @property
    def quadrature(self) -> tuple[np.ndarray, np.ndarray]:
        return gauss_legendre(self.order, self.breakpoints)

    def gram(self) -> np.ndarray:
        nodes, weights = self.quadrature
        v = self(nodes)
        return (v * weights) @ v.T


@dataclass(frozen=True)
class OrthonormalBasis:
    """Finite orthonormal family (B_0, ..., B_{P-1}) on [0, 1].

    ``kind`` is one of ``'spline'``, ``'fourier'``, ``'legendre'`` or
    ``'custom'`` and drives the default truncation index.
    """

    evaluate: ArrayFunc = field(repr=False)
    labels: tuple[str, ...]
    breakpoints: tuple[float, ...] = (0.0, 1.0)
    order: int = DEFAULT_ORDER
    kind: str = "custom"
    name: str = ""
    continuously_differentiable: bool = True

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def size(self) -> int:
        return len(self.labels)

    def __call__(self, s) -> np.ndarray:
        """Matrix of shape (size, len(s)) with ``B_p(s_j)`` in row ``p``."""
        return self.evaluate(_as_points(s))

    @cached_property
    def values_at_zero(self) -> np.ndarray:
        v = self(np.zeros(1))[:, 0]
        v.setflags(write=False)
        return v

    @property
    def quadrature(self) -> tuple[np.ndarray, np.ndarray]:
        return gauss_legendre(self.order, self.breakpoints)

    def gram(self) -> np.ndarray:
        nodes, weights = self.quadrature
        v = self(nodes)
        return (v * weights) @ v.T

    def orthonormality_residual(self) -> float:
        return float(np.max(np.abs(self.gram() - np.eye(self.size))))

    def coefficients(self, f: ArrayFunc, breakpoints: Optional[Sequence[float]] = None) -> np.ndarray:
        """Inner products ``<B_p, f>`` for every p."""
        edges = self.breakpoints if breakpoints is None else _merge_edges(self.breakpoints, breakpoints)
        nodes, weights = gauss_legendre(self.order, edges)
        return self(nodes) @ (weights * np.asarray(f(nodes), dtype=float))

    def project(self, f: ArrayFunc) -> ArrayFunc:
        c = self.coefficients(f)
        return lambda s: c @ self(s)


def _merge_edges(a: Sequence[float], b: Sequence[float]) -> np.ndarray:
    edges = np.unique(np.concatenate([np.asarray(a, float), np.asarray(b, float)]))
    return edges[(edges >= 0.0) & (edges <= 1.0)]


def _monomial(k: int) -> ArrayFunc:
    return lambda s: s ** k


def _truncated_cubic(knot: float) -> ArrayFunc:
    return lambda s: np.maximum(s - knot, 0.0) ** 3


def spline_raw_basis(knots: Sequence[float], order: int = DEFAULT_ORDER) -> RawBasis:
    """Cubic splines with interior ``knots``: 1, s, s^2, s^3, (s - knot)_+^3."""
    knots = [float(k) for k in knots]
    if any(not 0.0 < k < 1.0 for k in knots):
        raise ValueError("knots must lie in the open interval (0, 1)")
    if any(b <= a for a, b in zip(knots, knots[1:])):
        raise ValueError("knots must be strictly increasing")
    funcs = [_monomial(k) for k in range(4)] + [_truncated_cubic(k) for k in knots]
    labels = ["1", "s", "s^2", "s^3"] + [f"(s-{k:.6g})_+^3" for k in knots]
    return RawBasis(tuple(funcs), tuple(labels), (0.0, *knots, 1.0), order)


def orthonormalize(raw: RawBasis, kind: str = "custom", name: str = "") -> OrthonormalBasis:
    """Modified Gram-Schmidt with one reorthogonalisation pass and a Cholesky refinement.

    Works on the raw functions sampled at the quadrature nodes and records
    the triangular change of basis, so the result evaluates anywhere as
    ``C @ raw(s)``.
    """
    nodes, weights = raw.quadrature
    values = raw(nodes)
    k = len(raw)
    coef = np.eye(k)
    ortho = np.empty_like(values)
    for i in range(k):
        v = values[i].copy()
        c = coef[i].copy()
        start = np.sqrt(np.sum(weights * v * v))
        for _ in range(2):
            for j in range(i):
                r = np.sum(weights * ortho[j] * v)
                v -= r * ortho[j]
                c -= r * coef[j]
        norm = np.sqrt(np.sum(weights * v * v))
        if norm < PIVOT_TOL * max(start, 1.0):
            raise DegeneracyError(f"Gram-Schmidt pivot {norm:.3g} for {raw.labels[i]!r}")
        ortho[i] = v / norm
        coef[i] = c / norm
    # the recorded change of basis loses digits to cancellation; one Cholesky pass restores them
    v = coef @ values
    chol = np.linalg.cholesky((v * weights) @ v.T)
    coef = np.linalg.solve(chol, coef)
    coef.setflags(write=False)
    return OrthonormalBasis(
        evaluate=lambda s: coef @ raw(s),
        labels=tuple(f"B{p}" for p in range(k)),
        breakpoints=raw.breakpoints,
        order=raw.order,
        kind=kind,
        name=name,
    )


def spline_basis(knots: Sequence[float], order: int = DEFAULT_ORDER, name: str = "") -> OrthonormalBasis:
    return orthonormalize(spline_raw_basis(knots, order), kind="spline", name=name)


def spline5_basis(order: int = DEFAULT_ORDER) -> OrthonormalBasis:
    """Orthonormal cubic splines with knots at k/6, k = 1..5 (dimension 9)."""
    return spline_basis([k / 6 for k in range(1, 6)], order, name="spline5")


def fourier_basis(max_index: int, order: int = DEFAULT_ORDER) -> OrthonormalBasis:
    """1, then sqrt(2) cos(2 pi p s) and sqrt(2) sin(2 pi p s) for p = 1..max_index."""
    if max_index < 0:
        raise ValueError("max_index must be >= 0")
    freqs = np.arange(1, max_index + 1)
    root2 = math.sqrt(2.0)

    def evaluate(s):
        out = np.empty((1 + 2 * max_index, s.size))
        out[0] = 1.0
        arg = 2.0 * np.pi * np.outer(freqs, s)
        out[1::2] = root2 * np.cos(arg)
        out[2::2] = root2 * np.sin(arg)
        return out

    labels = ["1"]
    for p in freqs:
        labels += [f"cos{p}", f"sin{p}"]
    return OrthonormalBasis(evaluate, tuple(labels), tuple(uniform_panels(0.0, 1.0, max(1, max_index))),
                            order, kind="fourier", name=f"fourier:{max_index}")


def legendre_basis(degree: int, order: int = DEFAULT_ORDER) -> OrthonormalBasis:
    """Shifted Legendre polynomials sqrt(2p + 1) P_p(2s - 1), p = 0..degree."""
    if degree < 0:
        raise ValueError("degree must be >= 0")
    scale = np.sqrt(2.0 * np.arange(degree + 1) + 1.0)

    def evaluate(s):
        return (np.polynomial.legendre.legvander(2.0 * s - 1.0, degree) * scale).T

    panels = max(1, math.ceil((degree + 1) / 32))
    return OrthonormalBasis(evaluate, tuple(f"P{p}" for p in range(degree + 1)),
                            tuple(uniform_panels(0.0, 1.0, panels)), order,
                            kind="legendre", name=f"legendre:{degree}")


def make_basis(code: str) -> OrthonormalBasis:
    """Basis from a config name: ``spline5``, ``fourier:<k>`` or ``legendre:<k>``."""
    code = code.strip()
    head, _, arg = code.partition(":")
    if head == "spline5" and not arg:
        return spline5_basis()
    try:
        k = int(arg)
    except ValueError:
        raise ValueError(f"unknown basis {code!r}") from None
    if head == "fourier":
        return fourier_basis(k)
    if head == "legendre":
        return legendre_basis(k)
    if head == "spline":
        return spline_basis([j / (k + 1) for j in range(1, k + 1)], name=code)
    raise ValueError(f"unknown basis {code!r}")


def default_tau(basis: OrthonormalBasis, n: int) -> int:
    """Largest basis index used by the jump-rate estimator.

    Finite spline and Legendre families use every function.  For Fourier,
    floor(n ** 0.25) cosine terms are kept (with their sine partners).
    """
    if basis.kind == "fourier":
        return min(2 * int(math.floor(n ** 0.25)), basis.size - 1)
    return basis.size - 1


def gamma_n(basis: OrthonormalBasis, tau: int, grid_size: int = 10001) -> float:
    """sup over s in [0, 1] of |sum_{p <= tau} B_p(0) B_p(s)|, taken on a uniform grid."""
    if not 0 <= tau < basis.size:
        raise ValueError(f"tau={tau} outside [0, {basis.size - 1}]")
    if grid_size < 1001:
        raise ValueError("grid_size must be >= 1001")
    s = np.linspace(0.0, 1.0, grid_size)
    b0 = basis.values_at_zero[: tau + 1]
    return float(np.max(np.abs(b0 @ basis(s)[: tau + 1])))
