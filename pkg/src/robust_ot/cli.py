"""Command-line front end.

Exit codes: 0 on success, 2 on usage or input errors, 1 on solver errors.
"""
import argparse
import json
import os
import sys

import numpy as np

from .dual import dual_ascent
from .estimation import (CandidateFamily, ResilienceProfile, independence_test,
                         mde_scores, robust_distance_certificate, sweep_radius,
                         two_sample_test)
from .exact import RobustProblem, solve_asymmetric, solve_robust, solve_standard
from .exceptions import InputFormatError, RobustOTError
from .io import read_measure, read_pairs, sweep_csv
from .measures import GroundCost
from .sinkhorn import SinkhornConfig, solve_robust_entropic
from .sliced import sliced_distance


class UsageError(Exception):
    pass


def parse_grid(text):
    """``a:b:step`` -> ``a, a + step, ...`` up to ``b`` inclusive."""
    try:
        a, b, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise UsageError(f"grid must look like start:stop:step, got {text!r}") from None
    if not (np.isfinite(a) and np.isfinite(b) and np.isfinite(step)) or step <= 0 or b < a:
        raise UsageError(f"bad grid {text!r}")
    count = int(np.floor((b - a) / step + 1e-9)) + 1
    return np.round(a + step * np.arange(count), 12)


def _to_jsonable(obj):
    if isinstance(obj, dict):
        return {k: _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _to_jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dump_json(obj):
    # float repr is the shortest string that reads back to the same double
    return json.dumps(_to_jsonable(obj), indent=2, allow_nan=False) + "\n"


def _threads(n):
    if n == 0:
        return os.cpu_count() or 1
    return n


def _removed_summary(measure):
    return {"mass": measure.mass, "atoms": measure.size,
            "points": measure.points, "weights": measure.weights}


def _solution_json(sol, args, extra=None):
    out = {"command": args.command, "p": sol.p, "value": sol.value, "value_p": sol.value_p}
    if extra:
        out.update(extra)
    out["approximate"] = bool(sol.approximate)
    out["removed_mu"] = _removed_summary(sol.removed_mu)
    out["removed_nu"] = _removed_summary(sol.removed_nu)
    if getattr(args, "plan", False):
        out["plan"] = [[i, j, m] for i, j, m in sol.plan]
    return out


def _sinkhorn_config(args, problem):
    reg = args.reg
    if reg is None:
        C = problem.cost_matrix()
        reg = 1e-3 * float(C.max()) if C.size and C.max() > 0 else 1e-3
    return SinkhornConfig(reg=reg, max_iters=args.max_iters)


def cmd_dist(args):
    mu, nu = read_measure(args.a), read_measure(args.b)
    cost = GroundCost(p=args.p)
    if args.method == "sinkhorn":
        problem = RobustProblem.symmetric(mu, nu, 0.0, cost=cost)
        sol = solve_robust_entropic(problem, _sinkhorn_config(args, problem))
    else:
        sol = solve_standard(mu, nu, cost, potentials=False)
    return dump_json(_solution_json(sol, args, {"method": args.method}))


def cmd_robust(args):
    mu, nu = read_measure(args.a), read_measure(args.b)
    cost = GroundCost(p=args.p)
    asym = args.eps_mu is not None or args.eps_nu is not None
    if asym:
        if args.eps is not None:
            raise UsageError("--eps cannot be combined with --eps-mu/--eps-nu")
        if args.method != "exact":
            raise UsageError("asymmetric radii need --method exact")
        if args.certificate:
            raise UsageError("--certificate needs a symmetric --eps")
        e1 = args.eps_mu or 0.0
        e2 = args.eps_nu or 0.0
        problem = RobustProblem(mu, nu, cost, e1, e2)
        sol = solve_asymmetric(problem, potentials=False)
        return dump_json(_solution_json(sol, args, {"method": "exact", "eps_mu": e1,
                                                    "eps_nu": e2}))
    if args.eps is None:
        raise UsageError("robust needs --eps (or --eps-mu/--eps-nu)")
    problem = RobustProblem.symmetric(mu, nu, args.eps, cost=cost)
    extra = {"method": args.method, "eps": args.eps}
    if args.method == "dual":
        pot = dual_ascent(problem, iters=args.iters, seed=args.seed)
        value_p = pot.objective
        out = {"command": "robust", "p": cost.p, "value": max(value_p, 0.0) ** (1.0 / cost.p),
               "value_p": value_p, **extra, "approximate": True,
               "potential": {"support": pot.support, "phi": pot.phi}}
    else:
        if args.method == "sinkhorn":
            sol = solve_robust_entropic(problem, _sinkhorn_config(args, problem))
        else:
            sol = solve_robust(problem, potentials=False)
        out = _solution_json(sol, args, extra)
    if args.certificate:
        if args.sigma is None or args.q is None:
            raise UsageError("--certificate needs --sigma and --q")
        profile = ResilienceProfile(args.sigma, args.q, cost.p)
        cert = robust_distance_certificate(mu, nu, cost.p, args.eps, profile, cost=cost)
        out["certificate"] = cert.to_dict()
    return dump_json(out)


def cmd_sweep(args):
    mu, nu = read_measure(args.a), read_measure(args.b)
    taus = parse_grid(args.grid)
    curve = sweep_radius(mu, nu, args.p, taus, threads=_threads(args.threads))
    return sweep_csv(curve)


def cmd_mde(args):
    sample = read_measure(args.sample)
    if args.candidates and args.template:
        raise UsageError("give either --candidates or --template, not both")
    if args.candidates:
        family = CandidateFamily([read_measure(f) for f in args.candidates],
                                 labels=list(args.candidates))
    elif args.template:
        if not args.grid:
            raise UsageError("--template needs --grid")
        family = CandidateFamily.location(read_measure(args.template), parse_grid(args.grid))
    else:
        raise UsageError("mde needs --candidates or --template")
    if args.delta < 0:
        raise UsageError("--delta must be non-negative")
    scores = mde_scores(sample, family, args.p, args.eps, one_sided=args.one_sided,
                        threads=_threads(args.threads))
    k = int(np.flatnonzero(scores <= scores.min() + args.delta)[0])
    return dump_json({"command": "mde", "p": args.p, "eps": args.eps, "delta": args.delta,
                      "one_sided": bool(args.one_sided), "index": k,
                      "label": family.labels[k], "value": scores[k], "scores": scores})


def cmd_test2s(args):
    mu, nu = read_measure(args.a), read_measure(args.b)
    dec = two_sample_test(mu, nu, args.p, args.eps, args.rho)
    return dump_json(dec.to_dict())


def cmd_testindep(args):
    x, y = read_pairs(args.pairs)
    dec = independence_test((x, y), args.p, args.eps, args.rho, max_atoms=args.max_atoms,
                            subsample=not args.no_subsample, seed=args.seed)
    return dump_json(dec.to_dict())


def cmd_sliced(args):
    mu, nu = read_measure(args.a), read_measure(args.b)
    mode = "average" if args.sliced == "avg" else "max"
    est = sliced_distance(mu, nu, p=args.p, k=args.k, eps=args.eps, mode=mode,
                          num_projections=args.projections, restarts=args.restarts,
                          seed=args.seed, threads=_threads(args.threads))
    out = {"command": "sliced", "mode": args.sliced, "p": args.p, "k": args.k,
           "eps": args.eps, "value": est.value, "value_p": est.value_p,
           "std_error": est.std_error, "std_error_p": est.std_error_p,
           "num_projections": est.num_projections, "seed": est.seed}
    if est.frames:
        out["frame"] = est.frames[0].U
    return dump_json(out)


def cmd_bench(args):
    from .bench import SUITES, run_suites
    names = args.suite or list(SUITES)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise UsageError(f"unknown suite(s): {', '.join(unknown)}; choose from "
                         f"{', '.join(SUITES)}")
    table, ok = run_suites(names, seed=args.seed, threads=_threads(args.threads))
    return table, (0 if ok else 1)


COMMANDS = {"dist": cmd_dist, "robust": cmd_robust, "sweep": cmd_sweep, "mde": cmd_mde,
            "test2s": cmd_test2s, "testindep": cmd_testindep, "sliced": cmd_sliced,
            "bench": cmd_bench}


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _pos_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--p", type=float, default=1.0, help="cost exponent (default 1)")
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--threads", type=_nonneg_int, default=1,
                        help="worker threads, 0 = one per CPU (default 1)")
    common.add_argument("-o", "--output", help="write the result here instead of stdout")

    parser = argparse.ArgumentParser(prog="robust-ot",
                                     description="Robust Wasserstein distances and estimators.")
    sub = parser.add_subparsers(dest="command", required=True)

    def pair(name, help_text):
        sp = sub.add_parser(name, parents=[common], help=help_text)
        sp.add_argument("a", help="first measure (.json or .csv)")
        sp.add_argument("b", help="second measure (.json or .csv)")
        return sp

    def solver_flags(sp, methods):
        sp.add_argument("--method", choices=methods, default="exact")
        sp.add_argument("--reg", type=float, default=None,
                        help="entropic regularization for --method sinkhorn "
                             "(default 0.001 * max cost)")
        sp.add_argument("--max-iters", type=_pos_int, default=20000,
                        help="Sinkhorn iteration limit")
        sp.add_argument("--plan", action="store_true", help="include the transport plan")

    sp = pair("dist", "classic Wasserstein distance")
    solver_flags(sp, ["exact", "sinkhorn"])

    sp = pair("robust", "robust distance")
    sp.add_argument("--eps", type=float, default=None)
    sp.add_argument("--eps-mu", type=float, default=None)
    sp.add_argument("--eps-nu", type=float, default=None)
    solver_flags(sp, ["exact", "sinkhorn", "dual"])
    sp.add_argument("--iters", type=_pos_int, default=9000, help="dual ascent steps")
    sp.add_argument("--certificate", action="store_true",
                    help="attach error bounds for the clean distance")
    sp.add_argument("--sigma", type=float, default=None, help="moment scale for --certificate")
    sp.add_argument("--q", type=float, default=None, help="moment order for --certificate")

    sp = pair("sweep", "robust distance along a grid of radii (CSV)")
    sp.add_argument("--grid", required=True, help="start:stop:step")

    sp = sub.add_parser("mde", parents=[common], help="minimum-distance estimate")
    sp.add_argument("sample", help="contaminated sample measure")
    sp.add_argument("--candidates", nargs="+", help="candidate measure files")
    sp.add_argument("--template", help="template measure of a location family")
    sp.add_argument("--grid", help="shift grid start:stop:step for --template")
    sp.add_argument("--eps", type=float, default=0.0)
    sp.add_argument("--delta", type=float, default=0.0)
    sp.add_argument("--one-sided", action="store_true",
                    help="trim only the sample, not the candidates")

    sp = pair("test2s", "robust two-sample test")
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--rho", type=float, required=True)

    sp = sub.add_parser("testindep", parents=[common], help="robust independence test")
    sp.add_argument("pairs", help='JSON {"x": [...], "y": [...]}')
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--rho", type=float, required=True)
    sp.add_argument("--max-atoms", type=_pos_int, default=40000)
    sp.add_argument("--no-subsample", action="store_true")

    sp = pair("sliced", "sliced robust distance")
    sp.add_argument("--sliced", choices=["avg", "max"], default="avg")
    sp.add_argument("--k", type=_pos_int, default=1)
    sp.add_argument("--projections", type=_pos_int, default=100)
    sp.add_argument("--restarts", type=_pos_int, default=20)
    sp.add_argument("--eps", type=float, default=0.0)

    sp = sub.add_parser("bench", parents=[common], help="run the fixture suites")
    sp.add_argument("--suite", nargs="+", help="suites to run (default: all)")
    return parser


def _emit(text, path):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        result = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"robust-ot {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except InputFormatError as exc:
        print(f"robust-ot {args.command}: input error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"robust-ot {args.command}: {exc}", file=sys.stderr)
        return 2
    except RobustOTError as exc:
        code = 2 if isinstance(exc, ValueError) else 1
        print(f"robust-ot {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return code
    except ValueError as exc:
        print(f"robust-ot {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # solver bug or numerical breakdown
        print(f"robust-ot {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    code = 0
    if isinstance(result, tuple):
        result, code = result
    try:
        _emit(result, args.output)
    except OSError as exc:
        print(f"robust-ot {args.command}: {exc}", file=sys.stderr)
        return 2
    return code
