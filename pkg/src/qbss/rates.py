"""Rate-of-convergence checks: modulus of continuity, Lipschitz-type maximal
functions and the pointwise error bounds they give for the operators.

Every sup computed here is a finite-grid estimate and therefore a lower
bound of the true sup.  Where such an estimate sits on the larger side of
an inequality, the check adds a grid-resolution slack (modulus bound) or
inflates the constant by ``M_INFLATION`` (maximal-function bound).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .moments import delta_n
from .operators import OperatorParams, apply_grid
from .qcore import (DEFAULT_POLICY, Evaluable, QLike, TruncationPolicy, evaluate,
                    jackson_integral, require_proper)
from .report import ExperimentReport

M_INFLATION = 1.25
MODULUS_GRID_POINTS = 2001
MONOTONE_TOL = 1e-12
CS_TOL = 1e-12
# operator values are accurate to ~1e-13; bound checks allow this much noise
EVAL_TOL = 1e-10


class NotNondecreasingError(ValueError):
    pass


@dataclass(frozen=True)
class ModulusEstimate:
    delta: float
    omega: float
    grid_step: float


@dataclass(frozen=True)
class LipschitzEstimate:
    alpha_exp: float
    M: float
    E_lo: float
    E_hi: float

    def __post_init__(self):
        if not 0 < self.alpha_exp <= 1:
            raise ValueError(f"Lipschitz exponent must lie in (0,1], got {self.alpha_exp}")
        if self.E_lo > self.E_hi:
            raise ValueError(f"empty set E = [{self.E_lo}, {self.E_hi}]")


def _omega(fv: np.ndarray, h: float, delta: float) -> float:
    shifts = min(int(math.floor(delta / h + 1e-9)), len(fv) - 1)
    best = 0.0
    for s in range(1, shifts + 1):
        best = max(best, float(np.max(np.abs(fv[s:] - fv[:-s]))))
    return best


def modulus(f: Evaluable, delta: float, domain: tuple[float, float] = (0.0, 1.0),
            grid_points: int = MODULUS_GRID_POINTS) -> ModulusEstimate:
    """Grid estimate of sup |f(t) - f(x)| over |t - x| <= delta within ``domain``."""
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    lo, hi = domain
    if not lo < hi or grid_points < 2:
        raise ValueError("need lo < hi and at least two grid points")
    xs = np.linspace(lo, hi, grid_points)
    h = xs[1] - xs[0]
    return ModulusEstimate(delta, _omega(evaluate(f, xs), h, delta), h)


def pointwise_bound_check(params: OperatorParams, f: Evaluable, x_grid: Sequence[float],
                          policy: TruncationPolicy = DEFAULT_POLICY,
                          domain: tuple[float, float] | None = None,
                          grid_points: int = MODULUS_GRID_POINTS) -> ExperimentReport:
    """Check |D_n f(x) - f(x)| <= 2 omega(f; sqrt(delta_n(x))) on ``x_grid``.

    ``omega`` is estimated on ``domain`` (default [0, max(x_grid) + 1]); the
    comparison allows 2 L h, with L the largest slope between neighbouring
    grid points and h the grid step.
    """
    xs = [float(x) for x in x_grid]
    lo, hi = domain or (0.0, max(xs, default=0.0) + 1.0)
    grid = np.linspace(lo, hi, grid_points)
    h = grid[1] - grid[0]
    fv = evaluate(f, grid)
    steps = np.diff(fv)
    if np.any(steps < -MONOTONE_TOL):
        i = int(np.argmax(steps < -MONOTONE_TOL))
        raise NotNondecreasingError(
            f"f is not nondecreasing: f({grid[i + 1]:g}) < f({grid[i]:g})")
    # L h with L the largest neighbour slope is just the largest step
    slack = 2 * float(np.max(np.abs(steps)))

    audits = apply_grid(params, [f], xs, policy)
    fx = evaluate(f, np.array(xs)) if xs else np.empty(0)
    report = ExperimentReport(["x", "lhs", "delta_n", "omega", "rhs", "holds"])
    for x, a, fxi in zip(xs, audits, fx):
        d = delta_n(params, x)
        omega = _omega(fv, h, math.sqrt(d))
        lhs = abs(a[0].value - fxi)
        rhs = 2 * omega
        report.add(x=x, lhs=lhs, delta_n=d, omega=omega, rhs=rhs,
                   holds=bool(lhs <= rhs + slack + EVAL_TOL))
    report.meta.update(n=params.n, q=params.q.q, alpha=params.alpha, beta=params.beta,
                       modulus_domain=[lo, hi], grid_step=h, slack=slack,
                       all_hold=all(report.column("holds")), policy=policy.as_dict())
    return report


class CauchySchwarzResult(NamedTuple):
    lhs: float
    rhs: float
    holds: bool


def q_integral_between(f: Evaluable, a: float, b: float, q: QLike,
                       policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """Int_a^b f d_q t as Int_0^b - Int_0^a."""
    upper = jackson_integral(f, b, q, policy).value
    return upper - (jackson_integral(f, a, q, policy).value if a > 0 else 0.0)


def cauchy_schwarz_q_check(a: float, b: float, q: QLike, x: float,
                           policy: TruncationPolicy = DEFAULT_POLICY) -> CauchySchwarzResult:
    """Compare Int_a^b |t-x| d_q t with (Int_a^b (t-x)^2 d_q t)^(1/2) (Int_a^b d_q t)^(1/2)."""
    qp = require_proper(q, "q-integral Cauchy-Schwarz check")
    if not b > 0:
        raise ValueError(f"b must be positive, got {b}")
    if not 0 <= a <= b * qp.q:
        raise ValueError(f"a must lie in [0, b q] = [0, {b * qp.q}], got {a}")
    lhs = q_integral_between(lambda t: np.abs(t - x), a, b, qp, policy)
    sq = q_integral_between(lambda t: (t - x) ** 2, a, b, qp, policy)
    length = q_integral_between(lambda t: np.ones_like(t), a, b, qp, policy)
    rhs = math.sqrt(max(sq, 0.0)) * math.sqrt(max(length, 0.0))
    return CauchySchwarzResult(lhs, rhs, bool(lhs <= rhs + CS_TOL))


def lipschitz_maximal(f: Evaluable, alpha_exp: float, x: float,
                      t_grid: Sequence[float]) -> float:
    """Grid sup over t > 0, t != x of |f(t) - f(x)| / |t - x|^alpha_exp."""
    t = np.asarray(t_grid, dtype=float)
    t = t[(t > 0) & (np.abs(t - x) >= 1e-9)]
    if t.size == 0:
        return 0.0
    fx = float(evaluate(f, np.array([x]))[0])
    return float(np.max(np.abs(evaluate(f, t) - fx) / np.abs(t - x) ** alpha_exp))


def dist_to_set(x: float, E_lo: float, E_hi: float) -> float:
    """Distance from x to the interval [E_lo, E_hi] (E_hi may be inf)."""
    if E_lo > E_hi:
        raise ValueError(f"empty set E = [{E_lo}, {E_hi}]")
    if E_lo <= x <= E_hi:
        return 0.0
    return min(abs(x - E_lo), abs(x - E_hi))


def calibration_grid(points: int = 500, lo: float = 1e-4, hi: float = 50.0) -> np.ndarray:
    return np.geomspace(lo, hi, points)


def estimate_lipschitz(f: Evaluable, alpha_exp: float, E: tuple[float, float],
                       t_grid: Sequence[float] | None = None) -> LipschitzEstimate:
    """Inflated grid estimate of M with |f(t) - f(y)| <= M |t - y|^alpha for y in E."""
    E_lo, E_hi = E
    t = calibration_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    ys = [y for y in np.concatenate([[0.0], t]) if E_lo <= y <= E_hi]
    ys += [e for e in (E_lo, E_hi) if math.isfinite(e)]
    m = max((lipschitz_maximal(f, alpha_exp, y, t) for y in ys), default=0.0)
    return LipschitzEstimate(alpha_exp, M_INFLATION * m, E_lo, E_hi)


def maximal_bound_check(params: OperatorParams, f: Evaluable, alpha_exp: float,
                        E: tuple[float, float], x_grid: Sequence[float],
                        policy: TruncationPolicy = DEFAULT_POLICY,
                        t_grid: Sequence[float] | None = None) -> ExperimentReport:
    """Check |D_n f(x) - f(x)| <= M (delta_n(x)^(alpha/2) + d(x, E)) on ``x_grid``.

    With E = [0, inf) the distance term vanishes.
    """
    est = estimate_lipschitz(f, alpha_exp, E, t_grid)
    xs = [float(x) for x in x_grid]
    audits = apply_grid(params, [f], xs, policy)
    fx = evaluate(f, np.array(xs)) if xs else np.empty(0)
    report = ExperimentReport(["x", "lhs", "delta_n", "dist", "rhs", "holds"])
    for x, a, fxi in zip(xs, audits, fx):
        d = delta_n(params, x)
        dist = dist_to_set(x, est.E_lo, est.E_hi)
        lhs = abs(a[0].value - fxi)
        rhs = est.M * (d ** (alpha_exp / 2) + dist)
        report.add(x=x, lhs=lhs, delta_n=d, dist=dist, rhs=rhs, holds=bool(lhs <= rhs + EVAL_TOL))
    report.meta.update(n=params.n, q=params.q.q, alpha=params.alpha, beta=params.beta,
                       alpha_exp=alpha_exp, E=[est.E_lo, est.E_hi], M_est=est.M,
                       M_inflation=M_INFLATION, all_hold=all(report.column("holds")),
                       policy=policy.as_dict())
    return report
