"""Command line interface: ``pdmpjump <simulate|estimate|experiment|test|oracle>``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import oracle
from .estimator import JumpRateEstimator
from .experiment import read_config, run_replicates, write_replicate
from .model import format_float, read_trajectory, simulate, write_trajectory
from .tcp import KERNELS, SCENARIOS, tcp_model, true_rate


def _fmt(v) -> str:
    return "nan" if not np.isfinite(v) else format_float(v)


def cmd_simulate(args) -> int:
    model = tcp_model(args.N, args.scenario, args.kernel)
    traj = simulate(model, args.x0, args.n, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "trajectory.csv"
    write_trajectory(path, traj)
    print(path)
    return 0


def _fit(args) -> JumpRateEstimator:
    traj = read_trajectory(args.traj)
    return JumpRateEstimator(basis=args.basis, tau=args.tau, exit_time="tcp").fit(traj)


def cmd_estimate(args) -> int:
    est = _fit(args)
    truth = (true_rate(args.scenario)(est.states_) if args.scenario
             else np.full(est.states_.shape, np.nan))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "estimate.csv"
    write_replicate(path, est.states_, est.lambda_hat_, truth)
    print(path)
    return 0


def cmd_experiment(args) -> int:
    config = read_config(args.config)
    summary = run_replicates(config)
    print(f"{config.replicates} replicates written to {config.output_dir}")
    for x, med in zip(summary.states, summary.median):
        print(f"x={x:.4g} median lambda_hat={med:.4g}")
    return 0


def cmd_test(args) -> int:
    est = _fit(args)
    ps = None if args.p is None else [args.p]
    lines = ["p,x,y,statistic,q_alpha,reject"]
    for r in est.test_coefficients(args.alpha, ps):
        lines.append(f"{r.p},{_fmt(r.x)},{_fmt(r.y)},{_fmt(r.statistic)},{_fmt(r.quantile)},{int(r.reject)}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_oracle(args) -> int:
    model = tcp_model(args.N, args.scenario, args.kernel)
    x, y = (float(v) for v in args.pair.split(","))
    x, y = model.grid.lookup(model.grid.index(x)), model.grid.lookup(model.grid.index(y))
    t_star = model.exit_time(x)
    times = np.linspace(0.0, t_star, args.points, endpoint=False)
    cum = oracle.true_cumulative_lambda_tilde(model, x, y, times)
    lines = ["t,lambda_tilde,Lambda_tilde"]
    for t, c in zip(times, cum):
        lines.append(f"{_fmt(t)},{_fmt(oracle.true_lambda_tilde(model, x, y, t))},{_fmt(c)}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", choices=SCENARIOS, default="const5")
    p.add_argument("--N", type=int, default=10, help="grid size")
    p.add_argument("--kernel", choices=KERNELS, default="tcp")


def _fit_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--traj", required=True, help="trajectory file written by 'simulate'")
    p.add_argument("--basis", default="spline5", help="spline5, fourier:<k> or legendre:<k>")
    p.add_argument("--tau", type=int, default=None, help="largest basis index (default: per basis)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pdmpjump", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate one TCP-variant trajectory")
    _model_args(p)
    p.add_argument("--n", type=int, required=True, help="number of jumps")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="estimate the jump rate from a trajectory")
    _fit_args(p)
    p.add_argument("--scenario", choices=SCENARIOS, default=None, help="fill in the true rate")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("experiment", help="run replicated experiments from a config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("test", help="chi-squared nullity tests of the basis coefficients")
    _fit_args(p)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--p", type=int, default=None, help="restrict to one basis index")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("oracle", help="dump the modified rate of one state pair")
    _model_args(p)
    p.add_argument("--pair", required=True, help="x,y")
    p.add_argument("--points", type=int, default=101)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
