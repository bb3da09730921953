"""``sparsebf`` command line.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from .admm import AdmmConfig, Variant, admm_solve
from .beamformer import beampattern, optimal_sinr, reduced_mvdr
from .config import load_scenario
from .experiments import (
    METHODS,
    ExperimentKind,
    ExperimentSpec,
    compare_methods,
    covariance,
    load_experiment,
    run_experiment,
    write_csv,
)
from .numerics import SingularMatrixError, ValidationError
from .selection import enumerate_all, tune_lambda

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("solver (override the scenario file)")
    g.add_argument("--lambda", dest="lam", type=float, help="sparsity weight lambda")
    g.add_argument("--rho", type=float, help="augmented Lagrangian parameter (default: convergence bound)")
    g.add_argument("--epsilon", type=float, help="reweighting floor epsilon")
    g.add_argument("--eta", type=float, help="stopping tolerance on ||w - v||")
    g.add_argument("--k-max", type=int, help="iteration cap")
    g.add_argument("--variant", choices=[v.value for v in Variant], help="plain l1 or reweighted l1")
    g.add_argument("--init-seed", type=int, default=0, help="seed of the random starting v (default 0)")
    g.add_argument("--true-cov", action="store_true", help="use the true covariance instead of snapshots")
    g.add_argument("--snapshots", type=int, help="number of snapshots T for the sample covariance")
    g.add_argument("--seed", type=int, help="snapshot seed")


def _setup(args):
    sc = load_scenario(args.scenario)
    over = {k: getattr(args, k) for k in ("lam", "rho", "epsilon", "eta", "k_max", "variant", "snapshots", "seed")
            if getattr(args, k, None) is not None}
    if getattr(args, "true_cov", False):
        over["use_true_cov"] = True
    if getattr(args, "L", None) is not None:
        over["L"] = args.L
    sc = replace(sc, **over)
    s = sc.scenario()
    R = covariance(s, sc.use_true_cov, sc.snapshots, sc.seed)
    cfg = AdmmConfig(lam=sc.lam, rho=sc.rho, epsilon=sc.epsilon, eta=sc.eta, k_max=sc.k_max,
                     variant=Variant(sc.variant), init_seed=args.init_seed)
    return sc, s, R, cfg


def _fmt_support(sup) -> str:
    return "{" + ", ".join(str(i) for i in sup) + "}"


def cmd_solve(args) -> int:
    sc, s, R, cfg = _setup(args)
    res = admm_solve(cfg, R, s.steering())
    print(f"iterations      {res.iterations} ({res.termination.name.lower()})")
    print(f"rho             {res.rho:.6g} (bound {res.rho_bound:.6g})")
    print(f"primal residual {res.kkt.primal_residual:.3e}")
    print(f"stationarity    {res.kkt.stationarity_residual:.3e}")
    print(f"feasibility gap {res.kkt.feasibility_gap:.3e}")
    print("|w|             " + " ".join(f"{x:.4g}" for x in np.abs(res.w)))
    if args.trace:
        rows = [(k + 1, float(res.lagrangian_trace[k]), float(res.residual_trace[k]), float(res.gap_trace[k]))
                for k in range(res.iterations)]
        write_csv(args.trace, ["k", "lagrangian", "primal_residual", "feasibility_gap"], rows)
    return EXIT_OK


def cmd_select(args) -> int:
    sc, s, R, cfg = _setup(args)
    bounds = (args.lambda_lo, args.lambda_hi) if args.lambda_lo is not None and args.lambda_hi is not None else None
    rep = tune_lambda(sc.L, bounds, cfg, R, s.steering(), scenario=s)
    print(f"support   {_fmt_support(rep.support)}")
    print(f"lambda    {rep.lambda_used:.6g}")
    print(f"solves    {rep.search_iters}{' (fallback)' if rep.fallback else ''}")
    print(f"SINR (dB) {rep.sinr_db:.4f}")
    return EXIT_OK


def cmd_enumerate(args) -> int:
    sc, s, R, _ = _setup(args)
    best, worst = enumerate_all(s, R, sc.L)
    print(f"evaluated {best.search_iters} supports")
    print(f"best      {_fmt_support(best.support)}  {best.sinr_db:.4f} dB")
    print(f"worst     {_fmt_support(worst.support)}  {worst.sinr_db:.4f} dB")
    return EXIT_OK


def cmd_compare(args) -> int:
    sc, s, R, cfg = _setup(args)
    methods = args.methods.split(",") if args.methods else METHODS
    rows = compare_methods(s, sc.L, [m.strip() for m in methods], sc.use_true_cov, cfg, sc.snapshots, sc.seed,
                           args.random_draws, R=R)
    print(f"{'method':<12} {'SINR (dB)':>10}  support")
    for r in rows:
        print(f"{r.method:<12} {r.sinr_db:>10.4f}  {_fmt_support(r.support)}")
    print(f"{'optimal':<12} {optimal_sinr(s):>10.4f}")
    if args.output:
        write_csv(args.output, ["method", "support", "lambda", "sinr_db"],
                  [(r.method, r.support, r.lambda_used, r.sinr_db) for r in rows])
    return EXIT_OK


def cmd_pattern(args) -> int:
    sc, s, R, cfg = _setup(args)
    grid = np.arange(args.start, args.stop + args.step / 2, args.step)
    rep = tune_lambda(sc.L, None, cfg, R, s.steering(), scenario=s)
    gains = beampattern(reduced_mvdr(rep.support, s, R), grid, s.m)
    rows = [(float(a), float(g)) for a, g in zip(grid, gains)]
    if args.output:
        write_csv(args.output, ["angle_deg", "gain_db"], rows)
    else:
        print("angle_deg,gain_db")
        for a, g in rows:
            print(f"{a:.6g},{g:.6g}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec: ExperimentSpec = load_experiment(args.experiment)
    if args.output_dir:
        spec = replace(spec, output_dir=args.output_dir)
    if args.trials is not None:
        spec = replace(spec, trials=args.trials)
    if args.master_seed is not None:
        spec = replace(spec, master_seed=args.master_seed)
    for path in run_experiment(spec, threads=args.threads):
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparsebf",
        description="Sparse-array MVDR beamformer design with ADMM and L-of-M sensor selection.",
        epilog="Exit codes: 0 success, 2 invalid input, 3 numerical failure.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_cmd(name, help_):
        p = sub.add_parser(name, help=help_, description=help_)
        p.add_argument("scenario", help="scenario key-value file")
        _add_solver_flags(p)
        return p

    p = scenario_cmd("solve", "run one ADMM solve and report KKT residuals")
    p.add_argument("--trace", metavar="CSV", help="write the per-iteration trace to this CSV")
    p.set_defaults(func=cmd_solve)

    p = scenario_cmd("select", "tune lambda so exactly L sensors are active")
    p.add_argument("-L", type=int, help="number of sensors to keep")
    p.add_argument("--lambda-lo", type=float, help="lower end of the lambda search interval")
    p.add_argument("--lambda-hi", type=float, help="upper end of the lambda search interval")
    p.set_defaults(func=cmd_select)

    p = scenario_cmd("enumerate", "score every L-sensor subarray; report best and worst")
    p.add_argument("-L", type=int, help="number of sensors to keep")
    p.set_defaults(func=cmd_enumerate)

    p = scenario_cmd("compare", "compare selection methods by reduced-MVDR SINR")
    p.add_argument("-L", type=int, help="number of sensors to keep")
    p.add_argument("--methods", help=f"comma-separated subset of {','.join(METHODS)}")
    p.add_argument("--random-draws", type=int, default=100, help="random subsets averaged for Random (default 100)")
    p.add_argument("--output", metavar="CSV", help="also write the table to this CSV")
    p.set_defaults(func=cmd_compare)

    p = scenario_cmd("pattern", "beampattern of the ADMM-selected subarray")
    p.add_argument("-L", type=int, help="number of sensors to keep")
    p.add_argument("--start", type=float, default=-90.0, help="first angle in degrees (default -90)")
    p.add_argument("--stop", type=float, default=90.0, help="last angle in degrees (default 90)")
    p.add_argument("--step", type=float, default=0.5, help="angle step in degrees (default 0.5)")
    p.add_argument("--output", metavar="CSV", help="CSV path (default: print to stdout)")
    p.set_defaults(func=cmd_pattern)

    kinds = ", ".join(k.value for k in ExperimentKind)
    p = sub.add_parser("sweep", help="run an experiment file (or a manifest) and write CSVs",
                       description=f"Run an experiment file. Kinds: {kinds}.")
    p.add_argument("experiment", help="experiment key-value file or a manifest.txt from an earlier run")
    p.add_argument("--output-dir", help="override output_dir")
    p.add_argument("--trials", type=int, help="override the Monte Carlo trial count")
    p.add_argument("--master-seed", type=int, help="override master_seed")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="worker threads (default: logical cores); results do not depend on it")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SingularMatrixError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
