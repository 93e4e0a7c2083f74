"""Command-line driver: ``qbss {moments,korovkin,rate,density}``.

Exit codes: 0 success, 1 a check failed (or evaluation broke down),
2 invalid input.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Sequence

import numpy as np

from . import __version__
from .funcdsl import FuncEvalError, resolve
from .moments import verify_moments
from .operators import OperatorParams
from .qcore import DEFAULT_POLICY, QParam, TruncationError, TruncationPolicy
from .rates import maximal_bound_check, pointwise_bound_check
from .report import ExperimentReport
from .statconv import (NAMED_SETS, WeightedNorm, korovkin_experiment, make_qsequence,
                       natural_density, st_lim_check, weighted_korovkin_experiment)

EXIT_OK, EXIT_FAILED, EXIT_INVALID = 0, 1, 2
TOL_ENV = "QBSS_TOL"


class InvalidInput(ValueError):
    pass


def parse_floats(text: str) -> list[float]:
    """Comma list ``a,b,c`` or ``lo:hi:count`` (inclusive linspace)."""
    text = text.strip()
    if not text:
        return []
    try:
        if ":" in text:
            lo, hi, count = text.split(":")
            return [float(v) for v in np.linspace(float(lo), float(hi), int(count))]
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise InvalidInput(f"cannot parse number list {text!r}") from None


def parse_n_grid(text: str) -> list[int]:
    """``start:stop:factor`` expands geometrically; a comma list is taken as is."""
    try:
        if ":" in text:
            start, stop, factor = (int(v) for v in text.split(":"))
            if start < 1 or factor < 2 or stop < start:
                raise InvalidInput(f"bad n-grid {text!r}: need 1 <= start <= stop, factor >= 2")
            grid, n = [], start
            while n <= stop:
                grid.append(n)
                n *= factor
            return grid
        grid = [int(v) for v in text.split(",")]
    except ValueError:
        raise InvalidInput(f"cannot parse n-grid {text!r}") from None
    if not grid or min(grid) < 1 or grid != sorted(set(grid)):
        raise InvalidInput(f"n-grid must be increasing positive integers, got {text!r}")
    return grid


def parse_interval(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise InvalidInput(f"interval must look like 'lo,hi', got {text!r}")
    try:
        lo, hi = (float(p) for p in parts)
    except ValueError:
        raise InvalidInput(f"cannot parse interval {text!r}") from None
    if lo > hi or lo < 0:
        raise InvalidInput(f"need 0 <= lo <= hi, got {text!r}")
    return lo, hi


def resolve_policy(tol: float | None) -> TruncationPolicy:
    if tol is None and os.environ.get(TOL_ENV):
        try:
            tol = float(os.environ[TOL_ENV])
        except ValueError:
            raise InvalidInput(f"{TOL_ENV} is not a number: {os.environ[TOL_ENV]!r}") from None
    if tol is None:
        return DEFAULT_POLICY
    if not tol > 0:
        raise InvalidInput(f"tolerance must be positive, got {tol}")
    return TruncationPolicy(tol=tol)


def check_q(q: float) -> float:
    if not 0 < q < 1:
        raise InvalidInput("q must lie in (0,1)")
    return q


def check_stancu(alpha: float, beta: float):
    if alpha < 0 or beta < 0:
        raise InvalidInput("alpha and beta must be nonnegative")


def check_n(n: int):
    if n < 1:
        raise InvalidInput("n must be a positive integer")


def _meta(args, policy: TruncationPolicy) -> dict:
    config = {k: v for k, v in vars(args).items() if k not in ("handler", "out", "json")}
    return {"tool": "qbss", "version": __version__, "config": config,
            "policy": policy.as_dict()}


def cmd_moments(args, policy) -> tuple[ExperimentReport, int]:
    check_n(args.n)
    check_q(args.q)
    check_stancu(args.alpha, args.beta)
    xs = parse_floats(args.x)
    if any(x < 0 for x in xs):
        raise InvalidInput("x values must be nonnegative")
    report = verify_moments(OperatorParams(args.n, QParam(args.q), args.alpha, args.beta), xs, policy)
    return report, EXIT_OK if report.meta["all_within_tolerance"] else EXIT_FAILED


def cmd_korovkin(args, policy) -> tuple[ExperimentReport, int]:
    check_stancu(args.alpha, args.beta)
    if not 0 <= args.a < 1:
        raise InvalidInput("a must lie in [0,1)")
    if not args.nu > 0:
        raise InvalidInput("nu must be positive")
    if args.points < 2:
        raise InvalidInput("points must be >= 2")
    grid = parse_n_grid(args.n_grid)
    f = resolve(args.f)
    qseq = make_qsequence(args.qseq, args.a, args.seed)
    if args.weighted:
        if not args.xmax > 2:
            raise InvalidInput("xmax must exceed 2")
        report = weighted_korovkin_experiment(qseq, (args.alpha, args.beta), f,
                                              WeightedNorm(domain_cap=args.xmax), grid,
                                              policy, workers=args.workers)
        column = "weighted_err"
    else:
        report = korovkin_experiment(qseq, (args.alpha, args.beta), args.nu, grid, f, policy,
                                     points=args.points, workers=args.workers)
        column = "sup_err_f"
    # rows on the density-zero exception set are outliers, not the verdict
    outliers = [r["n"] for r in report.rows if r["n"] in qseq.exception_set]
    judged = [r for r in report.rows if r["n"] not in qseq.exception_set] or report.rows
    final = judged[-1][column]
    passed = final < args.pass_below
    report.meta.update(outlier_rows=outliers, verdict_row=judged[-1]["n"], final_err=final,
                       pass_below=args.pass_below, passed=passed)
    return report, EXIT_OK if passed else EXIT_FAILED


def cmd_rate(args, policy) -> tuple[ExperimentReport, int]:
    check_n(args.n)
    check_q(args.q)
    check_stancu(args.alpha, args.beta)
    xs = parse_floats(args.x)
    if any(x < 0 for x in xs):
        raise InvalidInput("x values must be nonnegative")
    f = resolve(args.f)
    params = OperatorParams(args.n, QParam(args.q), args.alpha, args.beta)
    if args.mode == "modulus":
        report = pointwise_bound_check(params, f, xs, policy)
    else:
        if not 0 < args.alpha_exp <= 1:
            raise InvalidInput("alpha-exp must lie in (0,1]")
        report = maximal_bound_check(params, f, args.alpha_exp, parse_interval(args.E), xs, policy)
    return report, EXIT_OK if report.meta["all_hold"] else EXIT_FAILED


def cmd_density(args, policy) -> tuple[ExperimentReport, int]:
    if args.seq is None:
        if args.N is None or args.N < 1:
            raise InvalidInput("N must be a positive integer")
        report = ExperimentReport(["N", "density"])
        report.add(N=args.N, density=natural_density(NAMED_SETS[args.set], args.N))
        report.meta["set"] = NAMED_SETS[args.set].description
        return report, EXIT_OK
    if not args.eps > 0:
        raise InvalidInput("eps must be positive")
    grid = parse_n_grid(args.N_grid) if args.N_grid else [args.N or 10_000]
    seq = resolve(args.seq, variable="j")
    report = st_lim_check(seq, args.L, args.eps, grid)
    return report, EXIT_OK if report.meta["consistent_with_st_lim"] else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="-", help="output path (default: stdout)")
    common.add_argument("--json", action="store_true", help="emit {meta, rows} JSON instead of CSV")
    common.add_argument("--tol", type=float, default=None,
                        help=f"truncation tolerance (overrides ${TOL_ENV})")

    stancu = argparse.ArgumentParser(add_help=False)
    stancu.add_argument("--alpha", type=float, default=0.0, help="Stancu shift alpha")
    stancu.add_argument("--beta", type=float, default=0.0, help="Stancu damping beta")

    parser = argparse.ArgumentParser(prog="qbss", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qbss {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("moments", parents=[common, stancu],
                       help="closed-form vs numeric moments")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--q", type=float, default=0.8)
    p.add_argument("--x", default="0,0.5,1,2,5", help="comma list or lo:hi:count")
    p.set_defaults(handler=cmd_moments)

    p = sub.add_parser("korovkin", parents=[common, stancu],
                       help="sup-norm convergence along a q-sequence")
    p.add_argument("--qseq", choices=["plain", "statistical"], default="plain")
    p.add_argument("--a", type=float, default=0.0, help="target st-lim of q_n^n")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-grid", default="4:256:2", help="start:stop:factor or comma list")
    p.add_argument("--nu", type=float, default=1.0, help="sup over [0, nu]")
    p.add_argument("--points", type=int, default=201)
    p.add_argument("--f", default="sat", help="builtin name or expression in x")
    p.add_argument("--weighted", action="store_true", help="weighted norm with rho = 1 + x^2")
    p.add_argument("--xmax", type=float, default=50.0, help="weighted sup over [0, xmax]")
    p.add_argument("--pass-below", type=float, default=0.05)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(handler=cmd_korovkin)

    p = sub.add_parser("rate", parents=[common, stancu], help="pointwise error-bound checks")
    p.add_argument("--mode", choices=["modulus", "lipschitz"], default="modulus")
    p.add_argument("--f", default="sat")
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--q", type=float, default=0.9)
    p.add_argument("--x", default="0:2:21", help="comma list or lo:hi:count")
    p.add_argument("--alpha-exp", type=float, default=1.0, help="Lipschitz exponent in (0,1]")
    p.add_argument("--E", default="0,inf", help="interval E as lo,hi")
    p.set_defaults(handler=cmd_rate)

    p = sub.add_parser("density", parents=[common], help="natural density and statistical limits")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--set", choices=sorted(NAMED_SETS), default="squares")
    src.add_argument("--seq", help="sequence expression in j, e.g. '1/j'")
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--N-grid", default=None, help="comma list or start:stop:factor")
    p.add_argument("--L", type=float, default=0.0)
    p.add_argument("--eps", type=float, default=0.01)
    p.set_defaults(handler=cmd_density)
    return parser


def _write(text: str, out: str):
    if out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        policy = resolve_policy(args.tol)
        report, status = args.handler(args, policy)
    except (FuncEvalError, TruncationError) as exc:
        print(f"qbss {args.command}: evaluation error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except ValueError as exc:
        print(f"qbss {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    report.meta = {**_meta(args, policy), **report.meta}
    _write(report.to_json() if args.json else report.to_csv(), args.out)
    return status


if __name__ == "__main__":
    sys.exit(main())
