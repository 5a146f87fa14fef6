"""PDMP models with discrete transitions and their exact simulation.

A model is the triple (jump rate, transition kernel, flow) plus the
deterministic exit time.  Inter-jump times are drawn by inverting the
cumulative hazard along the flow; a draw that exceeds the hazard
accumulated up to the exit time becomes a forced (boundary) jump.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from .exceptions import ModelError
from .quadrature import adaptive_simpson

CUMULATIVE_RATE_ATOL = 1e-10
ROOT_TOL = 1e-12

_TRAJECTORY_MAGIC = "# pdmp-trajectory v1"


@dataclass(frozen=True)
class StateGrid:
    """Finite set of states charged by the transition kernel."""

    points: tuple[float, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        if len(pts) < 2:
            raise ValueError("a state grid needs at least two points")
        if not all(math.isfinite(p) for p in pts):
            raise ValueError("grid points must be finite")
        if len(set(pts)) != len(pts):
            raise ValueError("grid points must be distinct")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "_index", {p: i for i, p in enumerate(pts)})

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self) -> Iterator[float]:
        return iter(self.points)

    def __contains__(self, x) -> bool:
        try:
            self.index(x)
        except KeyError:
            return False
        return True

    def index(self, x: float) -> int:
        """Ordinal of ``x``; tolerates round-off of 1e-12 when no exact match exists."""
        x = float(x)
        i = self._index.get(x)
        if i is not None:
            return i
        arr = self.as_array()
        j = int(np.argmin(np.abs(arr - x)))
        if abs(arr[j] - x) <= 1e-12:
            return j
        raise KeyError(f"{x!r} is not a grid state")

    def lookup(self, i: int) -> float:
        return self.points[i]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float)


@dataclass(frozen=True)
class PdmpModel:
    """Local characteristics of a PDMP whose kernel charges ``grid`` only.

    ``kernel(phi)`` returns nonnegative weights aligned with ``grid.points``;
    they are normalised before sampling.  ``cumulative_rate`` and
    ``inverse_cumulative_rate`` are optional closed forms of
    ``t -> int_0^t rate(flow(s, x)) ds`` and its inverse in ``t``.
    ``kink_times(x)`` optionally lists flow times from ``x`` where
    ``kernel(flow(t, x))`` is not smooth; quadrature routines split there.
    """

    grid: StateGrid
    flow: Callable[[float, float], float]
    rate: Callable[[float], float]
    kernel: Callable[[float], np.ndarray]
    exit_time: Callable[[float], float]
    cumulative_rate: Optional[Callable[[float, float], float]] = None
    inverse_cumulative_rate: Optional[Callable[[float, float], float]] = None
    kink_times: Optional[Callable[[float], Sequence[float]]] = None
    name: str = "custom"


@dataclass(frozen=True)
class Trajectory:
    """Observed post-jump locations and inter-jump times.

    ``z`` holds Z_0..Z_n (one more entry than ``s``); record ``i`` is
    ``(z[i], s[i], boundary[i])`` where ``s[i]`` is the time spent after
    landing in ``z[i]``.  ``z[n]`` may be absent when the trajectory was read
    from a file without a terminal line, in which case ``len(z) == len(s)``.
    """

    z: np.ndarray
    s: np.ndarray
    boundary: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        s = np.asarray(self.s, dtype=float)
        b = np.asarray(self.boundary, dtype=bool)
        if s.ndim != 1 or b.shape != s.shape:
            raise ValueError("s and boundary must be 1-d arrays of equal length")
        if z.ndim != 1 or z.size not in (s.size, s.size + 1):
            raise ValueError("z must have len(s) or len(s) + 1 entries")
        for arr in (z, s, b):
            arr.setflags(write=False)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "boundary", b)

    def __len__(self) -> int:
        return int(self.s.size)

    @property
    def n_transitions(self) -> int:
        """Number of observed (Z_i, Z_{i+1}) transitions."""
        return int(self.z.size - 1)

    @property
    def jump_times(self) -> np.ndarray:
        return np.cumsum(self.s)

    def records(self) -> Iterator[tuple[float, float, bool]]:
        for i in range(len(self)):
            yield float(self.z[i]), float(self.s[i]), bool(self.boundary[i])


def cumulative_rate(model: PdmpModel, x: float, t: float) -> float:
    """Hazard accumulated along the flow from ``x`` during ``t`` time units."""
    t_star = model.exit_time(x)
    if not (0.0 <= t <= t_star * (1.0 + 1e-12)):
        raise ValueError(f"t={t!r} outside [0, t_star(x)={t_star!r}]")
    if t == 0.0:
        return 0.0
    if model.cumulative_rate is not None:
        return float(model.cumulative_rate(x, t))
    rate, flow = model.rate, model.flow
    return adaptive_simpson(lambda u: rate(flow(u, x)), 0.0, t, atol=CUMULATIVE_RATE_ATOL)


def invert_cumulative_rate(model: PdmpModel, x: float, e: float) -> tuple[float, bool]:
    """Inter-jump time matching the unit-exponential draw ``e``.

    Returns ``(t_star(x), True)`` when the hazard up to the exit time does not
    exceed ``e``; otherwise the root of ``cumulative_rate(x, t) = e``.
    """
    t_star = model.exit_time(x)
    total = cumulative_rate(model, x, t_star)
    if total <= e:
        return t_star, True
    if model.inverse_cumulative_rate is not None:
        t = float(model.inverse_cumulative_rate(x, e))
    else:
        t = _solve_hazard(model, x, e, t_star)
    if t >= t_star:
        return t_star, True
    return t, False


def _solve_hazard(model: PdmpModel, x: float, e: float, t_star: float) -> float:
    # safeguarded Newton: bisection whenever the step leaves the bracket
    lo, hi = 0.0, t_star
    r0 = model.rate(x)
    t = e / r0 if r0 > 0 else 0.5 * t_star
    if not lo < t < hi:
        t = 0.5 * (lo + hi)
    for _ in range(200):
        g = cumulative_rate(model, x, t) - e
        if g > 0:
            hi = t
        else:
            lo = t
        slope = model.rate(model.flow(t, x))
        nxt = t - g / slope if slope > 0 else -1.0
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if abs(nxt - t) <= ROOT_TOL or hi - lo <= ROOT_TOL:
            return nxt
        t = nxt
    return t


def sample_interjump(model: PdmpModel, x: float, rng: np.random.Generator) -> tuple[float, bool]:
    """Draw ``(s, boundary)`` from the censored inter-jump law at ``x``."""
    model.grid.index(x)
    return invert_cumulative_rate(model, x, float(rng.standard_exponential()))


def kernel_probabilities(model: PdmpModel, phi: float) -> np.ndarray:
    w = np.asarray(model.kernel(phi), dtype=float)
    if w.shape != (len(model.grid),):
        raise ModelError(f"kernel returned shape {w.shape}, expected ({len(model.grid)},)")
    total = w.sum()
    if not total > 0 or np.any(w < 0) or not np.isfinite(total):
        raise ModelError(f"kernel row at {phi!r} cannot be normalised")
    return w / total


def sample_postjump(model: PdmpModel, phi: float, rng: np.random.Generator) -> float:
    """Post-jump location drawn from Q(.|phi)."""
    p = kernel_probabilities(model, phi)
    return model.grid.points[_pick(np.cumsum(p), float(rng.random()))]


def _pick(cum: np.ndarray, u: float) -> int:
    i = int(np.searchsorted(cum, u * cum[-1], side="right"))
    return min(i, cum.size - 1)


def simulate(model: PdmpModel, x0: float, n: int, seed: int) -> Trajectory:
    """Simulate ``n`` inter-jump periods starting from the grid state ``x0``.

    All randomness comes from one generator seeded with ``seed``: ``n``
    exponential draws for the hazard inversion followed by ``n`` uniforms for
    the post-jump locations.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    pts = model.grid.points
    x = pts[model.grid.index(x0)]
    rng = np.random.default_rng(seed)
    exps = rng.standard_exponential(n)
    unif = rng.random(n)

    z = np.empty(n + 1)
    s = np.empty(n)
    b = np.zeros(n, dtype=bool)
    flow, kernel = model.flow, model.kernel
    invert = invert_cumulative_rate
    z[0] = x
    for i in range(n):
        si, hit = invert(model, x, exps[i])
        s[i] = si
        b[i] = hit
        w = np.cumsum(kernel(flow(si, x)))
        if not w[-1] > 0:
            raise ModelError(f"kernel row at {flow(si, x)!r} cannot be normalised")
        x = pts[_pick(w, unif[i])]
        z[i + 1] = x
    return Trajectory(z=z, s=s, boundary=b, seed=seed)


def check_model(model: PdmpModel, n_samples: int = 200, seed: int = 0,
                atol: float = 1e-12) -> list[str]:
    """Check the structural invariants of ``model``.

    Raises :class:`ModelError` on a broken flow or kernel normalisation and
    returns human-readable notes for softer violations (kernel mass on the
    current grid point).
    """
    rng = np.random.default_rng(seed)
    pts = model.grid.as_array()
    notes = []
    t_stars = np.array([model.exit_time(x) for x in pts])
    if not np.all(np.isfinite(t_stars)) or np.any(t_stars <= 0):
        raise ModelError("exit times must be finite and positive on the grid")
    for _ in range(n_samples):
        i = int(rng.integers(len(pts)))
        x = pts[i]
        t, s = rng.random(2) * t_stars[i] / 2
        lhs = model.flow(t + s, x)
        rhs = model.flow(s, model.flow(t, x))
        if abs(lhs - rhs) > atol:
            raise ModelError(f"semigroup property fails at x={x}, t={t}, s={s}")
    for i, x in enumerate(pts):
        if model.flow(0.0, x) != x:
            raise ModelError(f"flow(0, x) != x at x={x}")
        p = kernel_probabilities(model, x)
        if abs(p.sum() - 1.0) > atol:
            raise ModelError(f"kernel row at {x} does not sum to one")
        if p[i] > 0:
            notes.append(f"Q({{x}}|x) = {p[i]:.3g} > 0 at grid state x={x}")
    return notes


def format_float(v: float) -> str:
    return format(float(v), ".17g")


def write_trajectory(path, traj: Trajectory) -> None:
    """Write ``traj`` as ``index,z,s_next,boundary`` lines.

    The final post-jump location Z_n goes on a terminal ``n,z_n,,`` line.
    """
    lines = [f"{_TRAJECTORY_MAGIC}, seed={traj.seed}"]
    for i, (z, s, b) in enumerate(traj.records()):
        lines.append(f"{i},{format_float(z)},{format_float(s)},{int(b)}")
    if traj.z.size == len(traj) + 1:
        lines.append(f"{len(traj)},{format_float(traj.z[-1])},,")
    Path(path).write_text("\n".join(lines) + "\n")


def read_trajectory(path) -> Trajectory:
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith(_TRAJECTORY_MAGIC):
        raise ValueError(f"{path}: missing '{_TRAJECTORY_MAGIC}' header")
    seed = None
    for part in text[0].split(","):
        key, _, val = part.strip().partition("=")
        if key == "seed" and val not in ("", "None"):
            seed = int(val)
    z, s, b = [], [], []
    for lineno, line in enumerate(text[1:], start=2):
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split(",")
        if len(fields) != 4:
            raise ValueError(f"{path}:{lineno}: expected 4 fields, got {len(fields)}")
        if int(fields[0]) != len(z):
            raise ValueError(f"{path}:{lineno}: records out of order")
        z.append(float(fields[1]))
        if fields[2] == "":
            break
        s.append(float(fields[2]))
        b.append(fields[3].strip() == "1")
    return Trajectory(z=np.array(z), s=np.array(s), boundary=np.array(b, dtype=bool), seed=seed)
