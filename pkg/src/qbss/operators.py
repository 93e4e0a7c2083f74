"""q-Baskakov-Szasz operators and their Stancu-type generalization.

The operator of order ``n`` acting on ``f`` at ``x`` is

    [n]_q * sum_k p_{n,k}(x) * Int_0^{q/(1-q^n)} q^{-k-1} s_{n,k}(t)
                                 f(([n]_q t q^{-k} + alpha)/([n]_q + beta)) d_q t

with the q-Baskakov basis ``p`` and the q-Szasz basis ``s``; ``alpha = beta
= 0`` gives the plain q-Baskakov-Szasz operator through the same code path.

Evaluation notes
----------------
On the Jackson nodes ``t_j = a q^j`` (``a = q/(1-q^n)``) we have
``[n]_q t_j = q^{j+1}/(1-q)``, so ``E_q(-[n]_q t_j) = (q^{j+1}; q)_inf`` and
all powers of ``q`` in the k-th inner integral combine to

    [n]_q I_k = sum_j q^{j(k+1)} (q^{j+1}; q)_inf f(node_{j-k}) / (q; q)_k

which never overflows.  The inner integrals do not depend on ``x``; they are
computed lazily and shared across an x-grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .qcore import (
    DEFAULT_POLICY,
    Evaluable,
    QDomainError,
    QLike,
    QParam,
    StopReason,
    TruncationError,
    TruncationPolicy,
    as_q,
    big_e_q,
    evaluate,
    first_stop,
    q_binomial,
    q_factorial,
    q_integer,
    q_pochhammer,
    require_proper,
)


@dataclass(frozen=True)
class OperatorParams:
    """Order ``n``, deformation ``q`` and Stancu shape parameters ``alpha``, ``beta``."""

    n: int
    q: QParam
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "q", as_q(self.q))
        if int(self.n) != self.n or self.n < 1:
            raise QDomainError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        if not (self.alpha >= 0 and self.beta >= 0):
            raise QDomainError(f"alpha and beta must be nonnegative, got {self.alpha}, {self.beta}")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "beta", float(self.beta))

    @property
    def nq(self) -> float:
        return q_integer(self.n, self.q)

    @property
    def upper_limit(self) -> float:
        """Upper endpoint q/(1-q^n) of the inner Jackson integrals."""
        qp = require_proper(self.q, "operator evaluation")
        return qp.q / -math.expm1(self.n * math.log(qp.q))

    def with_order(self, n: int, q: QLike) -> "OperatorParams":
        return OperatorParams(n, as_q(q), self.alpha, self.beta)


@dataclass(frozen=True)
class EvalAudit:
    value: float
    k_terms: int
    max_j_terms: int
    stop_reason: StopReason = StopReason.TOLERANCE


def baskakov_basis(params: OperatorParams, k: int, x: float) -> float:
    """q-Baskakov weight [n+k-1 choose k]_q q^{k(k-1)/2} x^k / (1+x)_q^{n+k}."""
    if x < 0:
        raise QDomainError(f"x must be nonnegative, got {x}")
    q, n = params.q.q, params.n
    return (q_binomial(n + k - 1, k, params.q) * q ** (k * (k - 1) / 2) * x ** k
            / q_pochhammer(x, n + k, params.q))


def log_basis_ratio(params: OperatorParams, k: int, x: float) -> float:
    """log(p_{n,k+1}(x) / p_{n,k}(x)) for x > 0."""
    q, n = params.q, params.n
    return (math.log(q_integer(n + k, q) / q_integer(k + 1, q)) + k * math.log(q.q)
            + math.log(x) - math.log1p(q.q ** (n + k) * x))


def baskakov_basis_sequence(params: OperatorParams, x: float, count: int) -> np.ndarray:
    """p_{n,0..count-1}(x) by the multiplicative recurrence used inside ``apply``."""
    if x < 0:
        raise QDomainError(f"x must be nonnegative, got {x}")
    out = np.zeros(count)
    if count == 0:
        return out
    out[0] = 1.0 / q_pochhammer(x, params.n, params.q)
    if x == 0:
        return out
    log_p = math.log(out[0])
    for k in range(1, count):
        log_p += log_basis_ratio(params, k - 1, x)
        out[k] = math.exp(log_p)
    return out


def szasz_basis(params: OperatorParams, k: int, t: float,
                policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """q-Szasz weight E_q(-[n]_q t) ([n]_q t)^k / [k]_q! on [0, q/(1-q^n)]."""
    upper = params.upper_limit
    if not 0 <= t <= upper * (1 + 1e-15):
        raise QDomainError(f"t={t} outside [0, {upper}]")
    nt = params.nq * t
    e = big_e_q(-nt, params.q, policy).value
    if k == 0:
        return e
    return e * nt ** k / q_factorial(k, params.q)


def stancu_node(params: OperatorParams, m: np.ndarray | int) -> np.ndarray:
    """Argument of ``f`` at Jackson node ``j`` of the k-th integral, ``m = j - k``."""
    q = params.q.q
    arg = np.exp((np.asarray(m, dtype=float) + 1) * math.log(q)) / (1.0 - q)
    return (arg + params.alpha) / (params.nq + params.beta)


class InnerIntegrals:
    """Lazily computed normalized inner integrals ``[n]_q I_k`` for one (params, f).

    Not shared between threads: each grid evaluation builds its own instance.
    """

    def __init__(self, params: OperatorParams, funcs: Sequence[Evaluable],
                 policy: TruncationPolicy):
        self.params = params
        self.funcs = list(funcs)
        self.policy = policy
        qp = require_proper(params.q, "operator evaluation")
        self.q = qp.q
        self.lq = math.log(qp.q)
        self.values: list[np.ndarray] = []
        self.j_terms: list[int] = []
        self._log_qq = 0.0  # log (q; q)_k
        self._E = np.empty(0)
        self._f_lo = 0       # f cache covers m in [_f_lo, _f_lo + width)
        self._f = np.empty((len(self.funcs), 0))

    def _ensure_E(self, length: int):
        """E[j] = (q^{j+1}; q)_inf for j < length."""
        if len(self._E) >= length:
            return
        length = max(length, 2 * len(self._E))
        # tail value from the q-exponential, then back-recursion E_j = E_{j+1}(1 - q^{j+1})
        tail = big_e_q(-math.exp(length * self.lq) / (1.0 - self.q), self.q,
                       self.policy, cross_check=False).value
        j = np.arange(1, length)
        factors = -np.expm1(j * self.lq)
        back = np.cumprod(factors[::-1])[::-1]
        self._E = tail * np.append(back, 1.0)

    def _eval_f(self, m_lo: int, m_hi: int) -> np.ndarray:
        pts = stancu_node(self.params, np.arange(m_lo, m_hi))
        block = np.empty((len(self.funcs), len(pts)))
        for i, f in enumerate(self.funcs):
            block[i] = evaluate(f, pts)
        if not np.all(np.isfinite(block)):
            raise QDomainError("integrand is not finite at some operator node")
        return block

    def _ensure_f(self, m_lo: int, m_hi: int):
        if self._f.shape[1] == 0:
            self._f, self._f_lo = self._eval_f(min(m_lo, -32), m_hi), min(m_lo, -32)
            return
        lo, hi = self._f_lo, self._f_lo + self._f.shape[1]
        if m_lo < lo:
            new_lo = min(m_lo, lo - 64)
            self._f = np.concatenate([self._eval_f(new_lo, lo), self._f], axis=1)
            self._f_lo = lo = new_lo
        if m_hi > hi:
            self._f = np.concatenate([self._f, self._eval_f(hi, max(m_hi, 2 * hi - lo))], axis=1)

    def _warmup(self, k: int) -> int:
        # weights q^{j(k+1)} E_j increase while q^j > 1 - q^{k+1}
        return max(0, math.ceil(math.log1p(-math.exp((k + 1) * self.lq)) / self.lq))

    def get(self, k: int) -> np.ndarray:
        while len(self.values) <= k:
            self._compute(len(self.values))
        return self.values[k]

    def _compute(self, k: int):
        if k > 0:
            self._log_qq += math.log(-math.expm1(k * self.lq))
        warmup = self._warmup(k)
        pol = self.policy
        need = warmup + pol.consecutive_small + math.ceil(
            math.log(pol.tol * 1e-3) / ((k + 1) * self.lq))
        length = min(pol.max_terms, max(need, 16))
        while True:
            self._ensure_E(length)
            self._ensure_f(-k, length - k)
            j = np.arange(length)
            w = np.exp(j * (k + 1) * self.lq - self._log_qq) * self._E[:length]
            fv = self._f[:, j - k - self._f_lo]
            terms = w * fv
            stop = first_stop(np.max(np.abs(terms), axis=0), pol, warmup)
            if stop >= 0:
                break
            if length >= pol.max_terms:
                raise TruncationError(
                    f"inner Jackson integral k={k}: no convergence within {pol.max_terms} nodes")
            length = min(pol.max_terms, 2 * length)
        self.values.append(terms[:, : stop + 1].sum(axis=1))
        self.j_terms.append(stop + 1)


def _outer_sum(params: OperatorParams, inner: InnerIntegrals, x: float) -> tuple[np.ndarray, int]:
    pol = inner.policy
    if x < 0:
        raise QDomainError(f"x must be nonnegative, got {x}")
    log_p = -math.log(q_pochhammer(x, params.n, params.q))
    total = np.zeros(len(inner.funcs))
    small_run = 0
    past_peak = x == 0
    prev = math.inf
    for k in range(pol.max_terms):
        if x == 0 and k > 0:
            summand = np.zeros(len(inner.funcs))
        else:
            summand = math.exp(log_p) * inner.get(k)
        total += summand
        mag = float(np.max(np.abs(summand)))
        if past_peak and mag < pol.tol and mag <= prev:
            small_run += 1
            if small_run >= pol.consecutive_small:
                return total, k + 1
        else:
            small_run = 0
        prev = mag
        if x > 0:
            step = log_basis_ratio(params, k, x)
            past_peak = past_peak or step < 0
            log_p += step
    raise TruncationError(f"outer operator sum at x={x}: no convergence within {pol.max_terms} terms")


def apply_many(params: OperatorParams, funcs: Sequence[Evaluable], x: float,
               policy: TruncationPolicy = DEFAULT_POLICY,
               inner: InnerIntegrals | None = None) -> list[EvalAudit]:
    """Evaluate the operator on several functions at once, sharing all weights."""
    inner = inner or InnerIntegrals(params, funcs, policy)
    values, k_terms = _outer_sum(params, inner, float(x))
    j_max = max(inner.j_terms[:k_terms]) if inner.j_terms else 0
    return [EvalAudit(float(v), k_terms, j_max) for v in values]


def apply(params: OperatorParams, f: Evaluable, x: float,
          policy: TruncationPolicy = DEFAULT_POLICY) -> EvalAudit:
    """Value of the operator on ``f`` at ``x`` with its truncation audit."""
    return apply_many(params, [f], x, policy)[0]


def apply_grid(params: OperatorParams, funcs: Sequence[Evaluable], xs: Sequence[float],
               policy: TruncationPolicy = DEFAULT_POLICY) -> list[list[EvalAudit]]:
    """``apply_many`` at each point of ``xs``; inner integrals are computed once."""
    inner = InnerIntegrals(params, funcs, policy)
    return [apply_many(params, funcs, x, policy, inner) for x in xs]


def central_moment(params: OperatorParams, r: int, x: float,
                   policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """Operator image of (t - x)^r at x, for r in {1, 2}."""
    if r not in (1, 2):
        raise ValueError(f"r must be 1 or 2, got {r}")
    return apply(params, lambda t: (t - x) ** r, x, policy).value
