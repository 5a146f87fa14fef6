"""Counting-process estimators of the jump rate.

For every ordered pair of grid states (x, y) the transitions x -> y form a
right-censored sample of inter-jump times: boundary hits are censored at
t_star(x), other jumps are events.  Their Nelson-Aalen cumulative hazard is
projected on an orthonormal basis of L2[0, 1] (after rescaling time by
t_star(x)) and the jump rate is reassembled as

    lambda_hat(x) = sum_{p <= tau} B_p(0) sum_y R_hat(y|x) theta_hat_p(x, y).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .basis import OrthonormalBasis, default_tau
from .exceptions import UnvisitedStateError
from .model import StateGrid, Trajectory

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous pure-jump function ``baseline + sum_{t_j <= t} increments_j``."""

    jump_times: np.ndarray
    increments: np.ndarray
    baseline: float = 0.0

    def __post_init__(self):
        t = np.asarray(self.jump_times, dtype=float)
        d = np.asarray(self.increments, dtype=float)
        if t.shape != d.shape or t.ndim != 1:
            raise ValueError("jump_times and increments must be 1-d and of equal length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("jump_times must be strictly increasing")
        object.__setattr__(self, "jump_times", t)
        object.__setattr__(self, "increments", d)

    def __len__(self) -> int:
        return int(self.jump_times.size)

    @property
    def levels(self) -> np.ndarray:
        """Values right after each jump."""
        return self.baseline + np.cumsum(self.increments)

    def __call__(self, t):
        k = np.searchsorted(self.jump_times, t, side="right")
        return self.baseline + np.concatenate([[0.0], np.cumsum(self.increments)])[k]

    def left_limit(self, t):
        k = np.searchsorted(self.jump_times, t, side="left")
        return self.baseline + np.concatenate([[0.0], np.cumsum(self.increments)])[k]


@dataclass(frozen=True)
class CountingData:
    """Event and censoring times of the x -> y transitions of a trajectory."""

    x: float
    y: float
    event_times: np.ndarray
    censor_times: np.ndarray
    _all: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        ev = np.sort(np.asarray(self.event_times, dtype=float))
        ce = np.sort(np.asarray(self.censor_times, dtype=float))
        object.__setattr__(self, "event_times", ev)
        object.__setattr__(self, "censor_times", ce)
        object.__setattr__(self, "_all", np.sort(np.concatenate([ev, ce])))

    @property
    def size(self) -> int:
        return int(self._all.size)

    def at_risk(self, t):
        """Y(t): number of x -> y sojourns of length at least ``t``."""
        return self._all.size - np.searchsorted(self._all, t, side="left")


def _pair_mask(z: np.ndarray, x: float, y: float) -> np.ndarray:
    return (z[:-1] == x) & (z[1:] == y)


def build_counting(traj: Trajectory, x: float, y: float) -> CountingData:
    """Counting data for the transitions ``x -> y``."""
    n = traj.n_transitions
    mask = _pair_mask(traj.z, x, y)
    times = traj.s[:n][mask]
    hits = traj.boundary[:n][mask]
    return CountingData(float(x), float(y), times[~hits], times[hits])


def nelson_aalen(c: CountingData) -> StepFunction:
    """Nelson-Aalen estimator; tied event times are merged into one jump d/Y."""
    if c.event_times.size == 0:
        return StepFunction(np.empty(0), np.empty(0))
    times, counts = np.unique(c.event_times, return_counts=True)
    return StepFunction(times, counts / c.at_risk(times))


def survival_fh(lam: StepFunction) -> StepFunction:
    """Jumps of 1 / G_hat = exp(Lambda_hat), with G_hat the Fleming-Harrington survival."""
    e = np.exp(np.concatenate([[0.0], np.cumsum(lam.increments)]))
    return StepFunction(lam.jump_times, np.diff(e), baseline=1.0)


@dataclass(frozen=True)
class TransitionEstimate:
    states: np.ndarray
    R_hat: np.ndarray
    nu_hat: np.ndarray
    visits: np.ndarray
    counts: np.ndarray

    @property
    def visited(self) -> np.ndarray:
        return self.visits > 0

    def __iter__(self):
        # unpacks as (R_hat, nu_hat)
        return iter((self.R_hat, self.nu_hat))


def state_indices(z: np.ndarray, states: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(states, z)
    idx = np.clip(idx, 0, states.size - 1)
    bad = states[idx] != z
    if np.any(bad):
        # tolerate text round-off
        near = np.abs(states[idx] - z) <= 1e-12
        if np.any(bad & ~near):
            raise ValueError(f"trajectory visits off-grid state {z[bad & ~near][0]!r}")
    return idx


def estimate_transition(traj: Trajectory, grid: Optional[StateGrid] = None) -> TransitionEstimate:
    """Empirical transition matrix and occupation frequencies.

    Unvisited rows of ``R_hat`` are NaN.  ``nu_hat`` counts Z_0..Z_{n-1}.
    """
    n = traj.n_transitions
    if n < 1:
        raise ValueError("need at least one observed transition")
    states = np.unique(traj.z) if grid is None else np.sort(grid.as_array())
    idx = state_indices(traj.z, states)
    k = states.size
    counts = np.zeros((k, k))
    np.add.at(counts, (idx[:-1], idx[1:]), 1.0)
    visits = counts.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        R = counts / visits[:, None]
    R[visits == 0] = np.nan
    return TransitionEstimate(states, R, visits / n, visits, counts)


def theta_coefficients(lam: StepFunction, basis: OrthonormalBasis, t_star: float) -> np.ndarray:
    """theta_hat_p for every p: (1/t_star) sum_j B_p(s_j / t_star) dLambda_j."""
    if len(lam) == 0:
        return np.zeros(basis.size)
    return basis(lam.jump_times / t_star) @ lam.increments / t_star


def estimate_theta(lam: StepFunction, basis: OrthonormalBasis, p: int, t_star: float) -> float:
    return float(theta_coefficients(lam, basis, t_star)[p])


def theta_variances(ginv: StepFunction, basis: OrthonormalBasis, t_star: float,
                    R_hat_xy: float, nu_hat_x: float) -> np.ndarray:
    """Variance estimates for every p: int B_p(s)^2 d[G_hat(t_star s)^-1] / (R nu t_star^2)."""
    if not (R_hat_xy > 0 and nu_hat_x > 0):
        raise UnvisitedStateError(f"R_hat={R_hat_xy}, nu_hat={nu_hat_x}: pair never visited")
    if len(ginv) == 0:
        return np.zeros(basis.size)
    b = basis(ginv.jump_times / t_star)
    return (b * b) @ ginv.increments / (R_hat_xy * nu_hat_x * t_star ** 2)


def estimate_theta_variance(lam: StepFunction, ginv: StepFunction, basis: OrthonormalBasis, p: int,
                            t_star: float, R_hat_xy: float, nu_hat_x: float) -> float:
    """Estimated asymptotic variance of sqrt(n) theta_hat_p(x, y).

    ``lam`` is accepted for symmetry with :func:`estimate_theta`; only the
    jumps of ``ginv`` enter the sum.
    """
    return float(theta_variances(ginv, basis, t_star, R_hat_xy, nu_hat_x)[p])


@dataclass
class EstimationResult:
    states: np.ndarray
    R_hat: np.ndarray
    nu_hat: np.ndarray
    theta_hat: np.ndarray  # [p, x, y]
    sigma2_theta_hat: np.ndarray  # [p, x, y]
    t_star: np.ndarray
    n: int
    tau: Optional[int] = None
    lambda_hat: Optional[np.ndarray] = None
    visits: Optional[np.ndarray] = None

    @property
    def visited(self) -> np.ndarray:
        return ~np.isnan(self.R_hat[:, 0])


def assemble_jump_rate(res: EstimationResult, basis: OrthonormalBasis, tau: int) -> np.ndarray:
    """lambda_hat over the states of ``res``; NaN where the state was never left."""
    if not 0 <= tau < basis.size:
        raise ValueError(f"tau={tau} outside [0, {basis.size - 1}]")
    b0 = basis.values_at_zero[: tau + 1]
    inner = np.einsum("xy,pxy->px", np.nan_to_num(res.R_hat), res.theta_hat[: tau + 1])
    lam = b0 @ inner
    lam[~res.visited] = np.nan
    return lam


def estimate(traj: Trajectory, basis: OrthonormalBasis, exit_time: Callable[[float], float],
             tau: Optional[int] = None, grid: Optional[StateGrid] = None) -> EstimationResult:
    """Run the whole estimation pipeline on one trajectory."""
    trans = estimate_transition(traj, grid)
    states = trans.states
    k = states.size
    P = basis.size
    n = traj.n_transitions
    tau = default_tau(basis, n) if tau is None else int(tau)
    z = traj.z
    idx = state_indices(z, states)
    s = traj.s[:n]
    hit = traj.boundary[:n]
    t_star = np.array([float(exit_time(x)) for x in states])
    theta = np.zeros((P, k, k))
    sigma2 = np.full((P, k, k), np.nan)
    missing = []
    order = np.argsort(idx[:-1], kind="stable")
    starts = np.searchsorted(idx[:-1][order], np.arange(k + 1))
    for i in range(k):
        rows = order[starts[i]:starts[i + 1]]
        if rows.size == 0:
            continue
        nxt = idx[1:][rows]
        for j in range(k):
            sel = rows[nxt == j]
            if sel.size == 0:
                missing.append((states[i], states[j]))
                continue
            c = CountingData(states[i], states[j], s[sel][~hit[sel]], s[sel][hit[sel]])
            lam = nelson_aalen(c)
            theta[:, i, j] = theta_coefficients(lam, basis, t_star[i])
            sigma2[:, i, j] = theta_variances(survival_fh(lam), basis, t_star[i],
                                              trans.R_hat[i, j], trans.nu_hat[i])
    if missing:
        logger.warning("%d state pairs never observed; their coefficients are set to 0 (first: %s)",
                       len(missing), missing[0])
    res = EstimationResult(states, trans.R_hat, trans.nu_hat, theta, sigma2, t_star, n, tau,
                           visits=trans.visits)
    res.lambda_hat = assemble_jump_rate(res, basis, tau)
    return res
