"""Command-line entry points.

Subcommands: `run` executes an experiment config and writes regret CSVs,
`sweep` grid-searches (nu, lambda), `validate-bound` Monte Carlo checks
the self-normalized tail bounds, and `ntk` reports kernel statistics for
a set of contexts. Exit codes: 0 success, 1 configuration error, 2
numerical failure at runtime.
"""

import argparse
import logging
import sys

import numpy as np

from .concentration import TrialConfig, export_trials_csv, violation_report
from .environments import SyntheticEnv
from .harness import (
    SWEEP_GRID,
    export_csv,
    export_sweep_csv,
    load_config,
    run_experiment,
    sweep,
)
from .ntk import norm_param_S, ntk_matrix


def _add_common(p):
    p.add_argument("--config", required=True, help="TOML or JSON experiment config")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--seeds", type=int, default=None, help="override the repeat count")
    p.add_argument("--parallel", type=int, default=1, help="worker processes")


def _cmd_run(args):
    cfg = load_config(args.config)
    if args.seeds is not None:
        cfg.repeats = args.seeds
    result = run_experiment(cfg, workers=args.parallel)
    export_csv(result, args.out)
    print(f"wrote {args.out} ({cfg.repeats} seeds, {result.wall_time:.1f}s)")


def _cmd_sweep(args):
    cfg = load_config(args.config)
    if args.seeds is not None:
        cfg.repeats = args.seeds
    nus = [float(v) for v in args.nus.split(",")] if args.nus else SWEEP_GRID
    lams = [float(v) for v in args.lams.split(",")] if args.lams else SWEEP_GRID
    result = sweep(cfg, nus, lams, workers=args.parallel)
    export_sweep_csv(result, args.out)
    for name, (nu, lam) in result.best.items():
        print(f"{name}: nu={nu:g} lambda={lam:g}")


def _cmd_validate(args):
    theta = None
    if args.theta_norm:
        theta = np.zeros(args.d)
        theta[0] = args.theta_norm
    cfg = TrialConfig(
        d=args.d, horizon=args.horizon, delta=args.delta, lam=args.lam,
        theta_star=theta, aligned=args.aligned,
    )
    report = violation_report(cfg, args.trials, base_seed=args.seed)
    export_trials_csv(args.out, cfg, args.trials, base_seed=args.seed)
    for v in sorted(report.violation_rate):
        print(
            f"{v}: violations {report.violation_rate[v]:.4f} "
            f"(se {report.violation_se[v]:.4f}), mean slack {report.mean_slack[v]:.3f}"
        )


def _cmd_ntk(args):
    if args.csv:
        data = np.loadtxt(args.csv, delimiter=",", skiprows=1, ndmin=2)
        contexts, h = data[:, :-1], data[:, -1]
    else:
        env = SyntheticEnv(args.kind, args.d, 1, args.n, args.seed)
        contexts = np.stack([env.round(t)[0][0] for t in range(1, args.n + 1)])
        h = np.array([env.round(t)[1][0] for t in range(1, args.n + 1)])
    kernel = ntk_matrix(contexts, args.depth)
    print(f"contexts: {contexts.shape[0]}, depth L={args.depth}")
    print(f"lambda_min(H) = {kernel.lambda_min:.10g}")
    print(f"S = sqrt(2 h^T H^-1 h) = {norm_param_S(h, kernel):.10g}")


def build_parser():
    parser = argparse.ArgumentParser(prog="neulogit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment config")
    _add_common(p)
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("sweep", help="grid-search nu and lambda")
    _add_common(p)
    p.add_argument("--nus", default=None, help="comma-separated nu grid")
    p.add_argument("--lams", default=None, help="comma-separated lambda grid")
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("validate-bound", help="Monte Carlo check of the tail bounds")
    p.add_argument("--out", required=True)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--horizon", type=int, default=500)
    p.add_argument("--d", type=int, default=5)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--theta-norm", type=float, default=0.0)
    p.add_argument("--aligned", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_validate)

    p = sub.add_parser("ntk", help="kernel statistics for a context set")
    p.add_argument("--csv", default=None, help="CSV with context columns then an h column")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--d", type=int, default=8)
    p.add_argument("--kind", default="h1", choices=("h1", "h2", "h3"))
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_ntk)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.fn(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
