"""Discrete-transition variant of the TCP window-size process on [0, 1].

The flow is ``x + t``, so the exit time is ``1 - x``.  After a jump from the
pre-jump position ``phi`` the process lands on ``y`` in
``{0, 1/N, ..., (N-1)/N}`` with probability proportional to
``1 / (1 + |y - phi/2| ** (1/4))``.
"""
from __future__ import annotations

import math

import numpy as np

from .model import PdmpModel, StateGrid

SCENARIOS = ("const5", "linear20x")
KERNELS = ("tcp", "fixed")


def tcp_grid(N: int) -> StateGrid:
    if int(N) != N or N < 2:
        raise ValueError(f"N must be an integer >= 2, got {N!r}")
    return StateGrid(tuple(k / N for k in range(int(N))))


def tcp_weights(points: np.ndarray, phi: float) -> np.ndarray:
    return 1.0 / (1.0 + np.sqrt(np.sqrt(np.abs(points - 0.5 * phi))))


def true_rate(scenario: str):
    """Jump rate of a named scenario as a vectorised callable."""
    if scenario == "const5":
        return lambda x: 5.0 + 0.0 * np.asarray(x, dtype=float)
    if scenario == "linear20x":
        return lambda x: 20.0 * np.asarray(x, dtype=float)
    raise ValueError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")


def tcp_model(N: int = 10, scenario: str = "const5", kernel: str = "tcp") -> PdmpModel:
    """Build the TCP-variant model.

    ``kernel='fixed'`` freezes the transition weights at ``phi = 0``, giving a
    kernel that ignores the pre-jump position (useful as a control case where
    the modified rate coincides with the jump rate along the flow).
    """
    grid = tcp_grid(N)
    pts = grid.as_array()
    pts.setflags(write=False)

    if kernel == "tcp":
        def q(phi):
            return tcp_weights(pts, phi)

        def kinks(x):
            t_star = 1.0 - x
            return sorted(t for t in (2.0 * y - x for y in pts) if 0.0 < t < t_star)
    elif kernel == "fixed":
        frozen = tcp_weights(pts, 0.0)
        frozen.setflags(write=False)

        def q(phi):
            return frozen

        kinks = None
    else:
        raise ValueError(f"unknown kernel {kernel!r}; expected one of {KERNELS}")

    if scenario == "const5":
        def rate(x):
            return 5.0

        def cum(x, t):
            return 5.0 * t

        def inv(x, e):
            return e / 5.0
    elif scenario == "linear20x":
        def rate(x):
            return 20.0 * x

        def cum(x, t):
            return 20.0 * x * t + 10.0 * t * t

        def inv(x, e):
            # root of 10 t^2 + 20 x t = e, cancellation-free form
            return (e / 10.0) / (x + math.sqrt(x * x + e / 10.0))
    else:
        raise ValueError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")

    return PdmpModel(
        grid=grid,
        flow=lambda t, x: x + t,
        rate=rate,
        kernel=q,
        exit_time=lambda x: 1.0 - x,
        cumulative_rate=cum,
        inverse_cumulative_rate=inv,
        kink_times=kinks,
        name=f"tcp-{scenario}-N{N}" + ("" if kernel == "tcp" else f"-{kernel}"),
    )


def tcp_exit_time(x):
    return 1.0 - np.asarray(x, dtype=float)
