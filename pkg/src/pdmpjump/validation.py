"""Input validation shared by the estimator and the command line."""
from __future__ import annotations

import numpy as np

from .model import Trajectory


def check_trajectory(X) -> Trajectory:
    """Coerce ``X`` into a :class:`Trajectory`.

    Accepts a Trajectory, a ``(z, s, boundary)`` triple where ``z`` may carry
    the final post-jump location, or an array of shape (n, 3) whose rows are
    ``(z, s_next, boundary)``.
    """
    if isinstance(X, Trajectory):
        traj = X
    elif isinstance(X, tuple) and len(X) == 3:
        traj = Trajectory(*X)
    else:
        arr = np.asarray(X, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValueError(f"expected a Trajectory or an (n, 3) array, got shape {arr.shape}")
        b = arr[:, 2]
        if not np.all((b == 0) | (b == 1)):
            raise ValueError("boundary column must contain only 0 and 1")
        traj = Trajectory(arr[:, 0], arr[:, 1], b.astype(bool))
    if traj.n_transitions < 1:
        raise ValueError("the trajectory must contain at least one transition")
    if not (np.all(np.isfinite(traj.s)) and np.all(traj.s >= 0)):
        raise ValueError("inter-jump times must be finite and nonnegative")
    if not np.all(np.isfinite(traj.z)):
        raise ValueError("post-jump locations must be finite")
    return traj


def check_states(X) -> np.ndarray:
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim > 1:
        raise ValueError(f"expected a 1-d array of states, got shape {arr.shape}")
    return np.atleast_1d(arr)


def check_trajectory_invariants(traj: Trajectory, model) -> None:
    """Raise ``ValueError`` if ``traj`` is inconsistent with ``model``."""
    grid = model.grid
    for i, (z, s, b) in enumerate(traj.records()):
        if z not in grid:
            raise ValueError(f"record {i}: z={z!r} is not a grid state")
        t_star = model.exit_time(z)
        if not 0.0 < s <= t_star:
            raise ValueError(f"record {i}: s_next={s!r} outside (0, {t_star!r}]")
        if b != (s == t_star):
            raise ValueError(f"record {i}: boundary flag disagrees with s_next == t_star(z)")
