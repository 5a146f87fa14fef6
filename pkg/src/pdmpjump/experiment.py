"""Replicated simulate -> estimate runs on the TCP-variant model.

Replicate ``r`` uses the seed ``seed ^ r`` and writes its own results file,
so replicates are independent of execution order.  A per-state quartile
summary (boxplot input) is written once every replicate is done.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .basis import make_basis
from .estimators import estimate
from .model import PdmpModel, format_float, simulate
from .tcp import KERNELS, SCENARIOS, tcp_model

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str = "const5"
    N: int = 10
    n: int = 20_000
    replicates: int = 100
    basis: str = "spline5"
    tau: Optional[int] = None
    seed: int = 0
    output_dir: str = "results"
    x0: float = 0.0
    kernel: str = "tcp"
    workers: int = 1

    def __post_init__(self):
        if self.scenario not in SCENARIOS + ("custom",):
            raise ValueError(f"scenario must be one of {SCENARIOS + ('custom',)}")
        if self.kernel not in KERNELS:
            raise ValueError(f"kernel must be one of {KERNELS}")
        if self.N < 2 or self.n < 1 or self.replicates < 1 or self.workers < 1:
            raise ValueError("need N >= 2, n >= 1, replicates >= 1 and workers >= 1")
        size = make_basis(self.basis).size
        if self.tau is not None and not 0 <= self.tau < size:
            raise ValueError(f"tau must lie in [0, {size - 1}] for basis {self.basis!r}")


_CASTS = {"N": int, "n": int, "replicates": int, "seed": int, "workers": int, "x0": float,
          "tau": lambda v: None if v.lower() in ("", "none") else int(v)}


def parse_config(text: str) -> ExperimentConfig:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    known = {f.name for f in fields(ExperimentConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not sep or key not in known:
            raise ValueError(f"line {lineno}: cannot parse {raw!r}")
        values[key] = _CASTS.get(key, str)(val)
    return ExperimentConfig(**values)


def read_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def build_model(config: ExperimentConfig) -> PdmpModel:
    if config.scenario == "custom":
        raise ValueError("scenario 'custom' needs an explicit model")
    return tcp_model(config.N, config.scenario, config.kernel)


def replicate_seed(seed: int, r: int) -> int:
    return int(seed) ^ int(r)


@dataclass
class ReplicateResult:
    index: int
    seed: int
    lambda_hat: np.ndarray
    unvisited: int


def run_replicate(config: ExperimentConfig, r: int, model: Optional[PdmpModel] = None) -> ReplicateResult:
    model = build_model(config) if model is None else model
    seed = replicate_seed(config.seed, r)
    traj = simulate(model, config.x0, config.n, seed)
    res = estimate(traj, make_basis(config.basis), model.exit_time, tau=config.tau, grid=model.grid)
    return ReplicateResult(r, seed, res.lambda_hat, int(np.sum(~res.visited)))


@dataclass
class ExperimentSummary:
    states: np.ndarray
    lambda_hat: np.ndarray  # [replicate, state]
    lambda_true: np.ndarray
    quartiles: np.ndarray = field(init=False)  # [state, (min, q1, median, q3, max)]

    def __post_init__(self):
        # numpy's default 'linear' rule is the type-7 order-statistic interpolation
        self.quartiles = np.nanquantile(self.lambda_hat, [0.0, 0.25, 0.5, 0.75, 1.0], axis=0).T

    @property
    def median(self) -> np.ndarray:
        return self.quartiles[:, 2]


def _fmt(v) -> str:
    return "nan" if not np.isfinite(v) else format_float(v)


def write_replicate(path: Path, states, lambda_hat, lambda_true) -> None:
    lines = ["x,lambda_hat,lambda_true"]
    lines += [f"{_fmt(x)},{_fmt(l)},{_fmt(t)}" for x, l, t in zip(states, lambda_hat, lambda_true)]
    path.write_text("\n".join(lines) + "\n")


def write_summary(path: Path, summary: ExperimentSummary) -> None:
    lines = ["x,min,q1,median,q3,max,lambda_true"]
    for x, q, t in zip(summary.states, summary.quartiles, summary.lambda_true):
        lines.append(",".join(_fmt(v) for v in (x, *q, t)))
    path.write_text("\n".join(lines) + "\n")


def _worker(args):
    config, r = args
    return run_replicate(config, r)


def run_replicates(config: ExperimentConfig, model: Optional[PdmpModel] = None,
                   order=None, write: bool = True) -> ExperimentSummary:
    """Run every replicate of ``config`` and write results under ``config.output_dir``.

    ``order`` permutes the execution order (results do not depend on it).
    """
    model = build_model(config) if model is None else model
    order = list(range(config.replicates)) if order is None else list(order)
    if sorted(order) != list(range(config.replicates)):
        raise ValueError("order must be a permutation of the replicate indices")
    if config.workers > 1 and config.scenario != "custom":
        with ProcessPoolExecutor(config.workers) as pool:
            results = list(pool.map(_worker, [(config, r) for r in order]))
    else:
        results = [run_replicate(config, r, model) for r in order]
    results.sort(key=lambda res: res.index)

    states = model.grid.as_array()
    truth = np.array([model.rate(x) for x in states], dtype=float)
    summary = ExperimentSummary(states, np.vstack([res.lambda_hat for res in results]), truth)
    notes = [f"replicate {res.index} (seed {res.seed}): {res.unvisited} unvisited states"
             for res in results if res.unvisited]
    for note in notes:
        logger.warning(note)
    if write:
        out = Path(config.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        for res in results:
            write_replicate(out / f"replicate_{res.index:04d}.csv", states, res.lambda_hat, truth)
        write_summary(out / "summary.csv", summary)
        (out / "warnings.log").write_text("".join(n + "\n" for n in notes))
    return summary
