"""Command-line interface.

Exit status is 0 on success, 1 for invalid input (including an uncertified
penalty) and 2 when a solver fails to make monotone progress.
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings

import numpy as np

from . import experiments as ex
from .bivariate import BivariatePenalty
from .convexity import fit_tridiag_bound, params_from_tridiag
from .diagnostics import objective_value, optimality_report, rmse
from .errors import CertificateWarning, DomainError, SolverFailure
from .io import fmt, read_signal, read_taps, signal_csv, write_signal, write_text
from .linop import as_filter, freq_response_sq
from .solver import Objective, SolverConfig, solve


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise DomainError(f"{self.prog}: {message}")


def _filter(arg):
    if arg in ex.PRESETS:
        return ex.PRESETS[arg]
    return as_filter(read_taps(arg))


def _add_solver_opts(p):
    p.add_argument("--family", default="atan", choices=["rational", "log", "atan"])
    p.add_argument("--algorithm", default="fbs", choices=["fbs", "mm"])
    p.add_argument("--tol", type=float, default=1e-4, help="relative stopping tolerance")
    p.add_argument("--max-iter", type=int, default=20000)


def _add_params_opts(p):
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--a1", type=float)
    p.add_argument("--a2", type=float)
    p.add_argument("--auto", action="store_true",
                   help="use the maximal certified parameters for the filter")
    p.add_argument("--unsafe", action="store_true",
                   help="allow parameters outside the convexity certificate")


def _penalty(args, h, lam):
    if args.auto:
        if args.a1 is not None or args.a2 is not None:
            raise DomainError("--auto cannot be combined with --a1/--a2")
        params = params_from_tridiag(fit_tridiag_bound(h), lam)
        return BivariatePenalty(args.family, params)
    if args.a1 is None or args.a2 is None:
        raise DomainError("give both --a1 and --a2, or --auto")
    return BivariatePenalty.make(args.family, args.a1, args.a2)


def _cfg(args):
    return SolverConfig(algorithm=args.algorithm, stop_rel_tol=args.tol, max_iter=args.max_iter)


def _print_kv(out, pairs):
    width = max(len(k) for k, _ in pairs)
    for k, v in pairs:
        if isinstance(v, float):
            v = fmt(v)
        out.write(f"{k.ljust(width)}  {v}\n")


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_demo(args, out):
    name = ex.EXAMPLE_PRESET[args.example]
    h = ex.PRESETS[name]
    spec = ex.ExperimentSpec(filter=name, sigmas=(args.sigma,), trials=1, seed=args.seed)
    x_true, y = ex.make_trial(spec, h, args.sigma, 0)
    lam = ex.lambda_rule(h, args.sigma if args.sigma > 0 else 1.0, spec.beta)
    bound = fit_tridiag_bound(h)
    params = params_from_tridiag(bound, lam)
    cfg = _cfg(args)
    l1 = ex.solve_l1_baseline(h, y, lam, cfg)
    obj = Objective(h, y, lam, BivariatePenalty(args.family, params), bound=bound)
    res = solve(obj, cfg)
    rep = optimality_report(obj, res.x_hat)
    _print_kv(out, [
        ("filter", name),
        ("taps", " ".join(fmt(v) for v in h.taps)),
        ("P(w)", f"{fmt(bound.p0)} + 2*{fmt(bound.p1)} cos w"),
        ("P(0), P(pi)", f"{fmt(bound.at_zero)} {fmt(bound.at_pi)}"),
        ("sigma", float(args.sigma)),
        ("lambda", lam),
        ("a1, a2", f"{fmt(params.a1)} {fmt(params.a2)}"),
        ("family", args.family),
        ("iterations", res.iterations),
        ("converged", res.converged),
        ("objective", res.objective),
        ("rmse L1", rmse(l1.x_hat, x_true)),
        ("rmse BISR", rmse(res.x_hat, x_true)),
        ("max violation", rep.max_violation),
        ("certificate", "pass" if rep.passed else "FAIL"),
    ])
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        files = {"x_true.csv": x_true, "y.csv": y, "x_l1.csv": l1.x_hat, "x_bisr.csv": res.x_hat}
        for fname, sig in files.items():
            write_signal(os.path.join(args.out, fname), sig)
        write_text(os.path.join(args.out, "h.csv"), signal_csv(h.taps))
        write_text(os.path.join(args.out, "optimality.csv"), rep.to_csv())
    return 0


def cmd_deconv(args, out):
    h = _filter(args.filter)
    y = read_signal(args.input)
    obj = Objective(h, y, args.lam, _penalty(args, h, args.lam), unsafe=args.unsafe)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CertificateWarning)
        res = solve(obj, _cfg(args))
    write_signal(args.output, res.x_hat)
    sys.stderr.write(
        f"a = ({fmt(obj.penalty.a1)}, {fmt(obj.penalty.a2)}); iterations {res.iterations}; "
        f"converged {res.converged}; objective {fmt(res.objective)}; "
        f"max violation {fmt(res.optimality_max_violation)}\n")
    return 0


def cmd_check_convexity(args, out):
    h = _filter(args.filter)
    bound = fit_tridiag_bound(h, grid_size=args.grid)
    w = np.linspace(0.0, np.pi, 20 * args.grid + 1)
    hmin = float(freq_response_sq(h, w).min())
    params = params_from_tridiag(bound, args.lam)
    _print_kv(out, [
        ("p0", bound.p0),
        ("p1", bound.p1),
        ("P(0)", bound.at_zero),
        ("P(pi)", bound.at_pi),
        ("degenerate", bound.degenerate),
        ("a1 max", params.a1),
        ("a2 max", params.a2),
        ("min |H|^2", hmin),
        ("separable a max", hmin / args.lam),
    ])
    return 0


def cmd_sweep(args, out):
    spec = ex.ExperimentSpec.load(args.config)
    if args.workers is not None:
        spec = ex.ExperimentSpec.from_dict({**spec.to_dict(), "workers": args.workers})
    report = ex.run_sweep(spec)
    out.write(report.table() + "\n")
    if args.csv:
        write_text(args.csv, report.to_csv())
    if args.timing:
        write_text(args.timing, report.timing_csv())
    return 0


def cmd_optimality(args, out):
    h = _filter(args.filter)
    y = read_signal(args.input)
    x = read_signal(args.solution)
    obj = Objective(h, y, args.lam, _penalty(args, h, args.lam), unsafe=args.unsafe)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CertificateWarning)
        rep = optimality_report(obj, x, tol=args.tol)
    if args.scatter:
        write_text(args.scatter, rep.to_csv())
    _print_kv(out, [
        ("objective", objective_value(obj, x)),
        ("max violation", rep.max_violation),
        ("tolerance", rep.tol),
        ("passed", rep.passed),
        ("certified convex", obj.certified),
    ])
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bisr", description="Sparse deconvolution with a bivariate penalty.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("demo", help="run one example trial")
    d.add_argument("--example", type=int, choices=[1, 2], required=True)
    d.add_argument("--sigma", type=float, default=4.0)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", help="directory for signal CSV files")
    _add_solver_opts(d)
    d.set_defaults(func=cmd_demo)

    c = sub.add_parser("deconv", help="deconvolve an observed signal")
    c.add_argument("--input", required=True, help="observed signal CSV")
    c.add_argument("--filter", required=True, help="filter CSV, preset name or inline taps")
    c.add_argument("--output", default="-")
    _add_params_opts(c)
    _add_solver_opts(c)
    c.set_defaults(func=cmd_deconv)

    k = sub.add_parser("check-convexity", help="certified parameter bounds for a filter")
    k.add_argument("--filter", required=True)
    k.add_argument("--lambda", dest="lam", type=float, required=True)
    k.add_argument("--grid", type=int, default=2048)
    k.set_defaults(func=cmd_check_convexity)

    s = sub.add_parser("sweep", help="Monte-Carlo RMSE sweep")
    s.add_argument("--config", required=True, help="JSON or key = value file")
    s.add_argument("--csv", help="write mean RMSE per sigma and method")
    s.add_argument("--timing", help="write mean run time per sigma and method")
    s.add_argument("--workers", type=int)
    s.set_defaults(func=cmd_sweep)

    o = sub.add_parser("optimality", help="check the optimality certificate of a solution")
    o.add_argument("--input", required=True)
    o.add_argument("--solution", required=True)
    o.add_argument("--filter", required=True)
    o.add_argument("--tol", type=float, default=1e-3)
    o.add_argument("--scatter", help="write index,x_n,v_n CSV")
    _add_params_opts(o)
    o.add_argument("--family", default="atan", choices=["rational", "log", "atan"])
    o.set_defaults(func=cmd_optimality)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        return args.func(args, out)
    except SolverFailure as exc:
        sys.stderr.write(f"bisr: solver failure: {exc}\n")
        return 2
    except DomainError as exc:
        sys.stderr.write(f"bisr: error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
