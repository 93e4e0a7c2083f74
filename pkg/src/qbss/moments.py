"""Closed-form moments of the q-Baskakov-Szasz(-Stancu) operators.

The formulas are evaluated term by term in their stated form, without
algebraic simplification, so that any disagreement with the numeric
double sum points at the formula rather than at a rewrite of it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .operators import OperatorParams, apply_grid
from .qcore import DEFAULT_POLICY, QLike, TruncationPolicy, as_q, q_integer, require_proper
from .report import ExperimentReport

MOMENT_TOL = 1e-8
VERIFY_COLUMNS = ["x", "closed_m1", "numeric_m1", "closed_m2", "numeric_m2", "err1", "err2"]


@dataclass(frozen=True)
class MomentSet:
    """Images of 1, t, t^2 and the second central moment at one point."""

    m0: float
    m1: float
    m2: float
    delta: float


def moments_basic(n: int, q: QLike, x: float) -> MomentSet:
    """Moments of the plain q-Baskakov-Szasz operator (q = 1 allowed)."""
    qp = as_q(q)
    q = qp.q
    nq = q_integer(n, qp)
    m1 = x + q / nq
    m2 = (1 + 1 / (q * nq)) * x ** 2 + x / nq * (1 + q * (q + 2)) + q ** 2 * (1 + q) / nq ** 2
    return MomentSet(1.0, m1, m2, m2 - 2 * x * m1 + x ** 2)


def moments_stancu(params: OperatorParams, x: float) -> MomentSet:
    q, a, b = params.q.q, params.alpha, params.beta
    nq = params.nq
    m1 = (nq * x + q + a) / (nq + b)
    m2 = ((nq * (q * nq + 1) / (q * (nq + b) ** 2)) * x ** 2
          + (((1 + q * (q + 2)) * nq + 2 * a * nq) / (nq + b) ** 2) * x
          + (q ** 2 * (1 + q) + 2 * q * a + a ** 2) / (nq + b) ** 2)
    return MomentSet(1.0, m1, m2, delta_n(params, x))


def delta_n(params: OperatorParams, x: float) -> float:
    """Second central moment, in the quadratic form used by the rate bounds."""
    q, a, b = params.q.q, params.alpha, params.beta
    nq = params.nq
    c2 = nq * (q * nq + 1) / (q * (nq + b) ** 2) + 1 - 2 * nq / (nq + b)
    c1 = (nq + q ** 2 * nq - 2 * a * b - 2 * q * b) / (nq + b) ** 2
    c0 = (q ** 2 * (1 + q) + 2 * q * a + a ** 2) / (nq + b) ** 2
    return c2 * x ** 2 + c1 * x + c0


def verify_moments(params: OperatorParams, x_grid: Sequence[float],
                   policy: TruncationPolicy = DEFAULT_POLICY) -> ExperimentReport:
    """Compare closed-form m1, m2 with the operator's truncated double sum."""
    require_proper(params.q, "numeric moment verification")
    report = ExperimentReport(list(VERIFY_COLUMNS), meta={
        "n": params.n, "q": params.q.q, "alpha": params.alpha, "beta": params.beta,
        "tolerance": MOMENT_TOL, "policy": policy.as_dict()})
    xs = [float(x) for x in x_grid]
    audits = apply_grid(params, [lambda t: t, lambda t: t * t], xs, policy) if xs else []
    flagged, terms = [], []
    for x, (a1, a2) in zip(xs, audits):
        closed = moments_stancu(params, x)
        err1, err2 = abs(closed.m1 - a1.value), abs(closed.m2 - a2.value)
        report.add(x=x, closed_m1=closed.m1, numeric_m1=a1.value, closed_m2=closed.m2,
                   numeric_m2=a2.value, err1=err1, err2=err2)
        terms.append({"k_terms": a2.k_terms, "max_j_terms": a2.max_j_terms})
        if max(err1, err2) > MOMENT_TOL:
            flagged.append(x)
    report.meta.update(flagged=flagged, all_within_tolerance=not flagged, term_counts=terms)
    return report
