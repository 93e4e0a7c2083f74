"""q-calculus primitives: q-integers, q-factorials, q-binomials, q-Pochhammer
products, the big q-exponential and Jackson q-integrals.

Infinite sums and products are truncated under an explicit
:class:`TruncationPolicy` and report how many terms they used, so that
experiment reports can audit convergence.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

import numpy as np

NEAR_ONE = 1e-12

Evaluable = Callable[..., object]


class QDomainError(ValueError):
    """An argument lies outside the domain where a formula is defined."""


class TruncationError(ArithmeticError):
    """A truncated sum/product hit its term cap before meeting the tolerance."""


@dataclass(frozen=True)
class QParam:
    """Deformation parameter ``0 < q <= 1``."""

    q: float

    def __post_init__(self):
        q = float(self.q)
        if not (0.0 < q <= 1.0) or math.isnan(q):
            raise QDomainError(f"q must lie in (0,1], got {self.q!r}")
        object.__setattr__(self, "q", q)

    @property
    def near_one(self) -> bool:
        return abs(1.0 - self.q) < NEAR_ONE

    def __float__(self) -> float:
        return self.q


QLike = Union[QParam, float]


def as_q(q: QLike) -> QParam:
    return q if isinstance(q, QParam) else QParam(q)


def require_proper(q: QLike, what: str) -> QParam:
    """Return ``q`` as a QParam, rejecting values numerically equal to 1."""
    qp = as_q(q)
    if qp.near_one:
        raise QDomainError(f"{what} requires q < 1 (got q={qp.q!r})")
    return qp


@dataclass(frozen=True)
class TruncationPolicy:
    """Stopping rule shared by every truncated evaluation.

    A series stops after ``consecutive_small`` successive terms whose
    magnitude is below ``tol``; more than ``max_terms`` terms is an error.
    """

    tol: float = 1e-14
    max_terms: int = 100_000
    consecutive_small: int = 3

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol!r}")
        if self.max_terms < 1:
            raise ValueError(f"max_terms must be >= 1, got {self.max_terms!r}")
        if self.consecutive_small < 1:
            raise ValueError(f"consecutive_small must be >= 1, got {self.consecutive_small!r}")

    def as_dict(self) -> dict:
        return {"tol": self.tol, "max_terms": self.max_terms,
                "consecutive_small": self.consecutive_small}


DEFAULT_POLICY = TruncationPolicy()


class StopReason(str, enum.Enum):
    TOLERANCE = "tolerance"
    CAP = "cap"


class Truncated(NamedTuple):
    value: float
    terms: int
    stop: StopReason


def evaluate(f: Evaluable, points: np.ndarray) -> np.ndarray:
    """Evaluate ``f`` on an array of points.

    Vectorized callables are called once; anything that rejects arrays
    (``math.sin``, branching lambdas) falls back to a scalar loop.
    """
    points = np.asarray(points, dtype=float)
    try:
        out = f(points)
    except (TypeError, ValueError):
        out = None
    if out is not None:
        arr = np.asarray(out, dtype=float)
        if arr.shape == points.shape:
            return arr
        if arr.ndim == 0:
            return np.full(points.shape, float(arr))
    return np.array([float(f(float(p))) for p in points.ravel()]).reshape(points.shape)


def first_stop(terms: np.ndarray, policy: TruncationPolicy, warmup: int = 0) -> int:
    """Index of the term at which the stopping rule fires, or -1.

    The rule fires at ``i`` when ``terms[i - c + 1 .. i]`` are all below
    ``tol`` in magnitude, with ``i >= warmup + c - 1``.
    """
    c = policy.consecutive_small
    small = np.abs(terms) < policy.tol
    idx = np.arange(len(terms))
    last_big = np.maximum.accumulate(np.where(small, -1, idx))
    run = idx - last_big
    ok = (run >= c) & (idx >= warmup + c - 1)
    if not ok.any():
        return -1
    return int(np.argmax(ok))


def truncated_series(block: Callable[[int, int], np.ndarray], policy: TruncationPolicy,
                     warmup: int = 0, what: str = "series") -> tuple[np.ndarray, int]:
    """Generate terms block by block until the stopping rule fires.

    ``block(start, stop)`` returns terms ``start..stop-1``.  Returns the
    retained terms and their count.
    """
    size = max(64, min(policy.max_terms, 2 * (warmup + policy.consecutive_small)))
    terms = np.empty(0)
    while True:
        size = min(size, policy.max_terms)
        new = np.asarray(block(len(terms), size), dtype=float)
        terms = np.concatenate([terms, new])
        if not np.all(np.isfinite(terms)):
            bad = int(np.argmax(~np.isfinite(terms)))
            raise TruncationError(f"{what}: non-finite term at index {bad}")
        stop = first_stop(terms, policy, warmup)
        if stop >= 0:
            return terms[: stop + 1], stop + 1
        if size >= policy.max_terms:
            raise TruncationError(
                f"{what}: no convergence within max_terms={policy.max_terms}")
        size *= 2


def q_integer(n: int, q: QLike) -> float:
    """[n]_q = (1 - q^n)/(1 - q), and n itself when q is numerically 1."""
    qp = as_q(q)
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    if qp.near_one:
        return float(n)
    # expm1/log1p keep full relative precision as q -> 1
    return -math.expm1(n * math.log(qp.q)) / (1.0 - qp.q)


def q_factorial(n: int, q: QLike) -> float:
    qp = as_q(q)
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    return math.prod(q_integer(j, qp) for j in range(1, n + 1))


def q_binomial(n: int, k: int, q: QLike) -> float:
    """Gaussian binomial coefficient, as a product of ratios [n-j]/[j+1]."""
    qp = as_q(q)
    if not 0 <= k <= n:
        raise ValueError(f"q_binomial needs 0 <= k <= n, got n={n}, k={k}")
    k = min(k, n - k)
    out = 1.0
    for j in range(k):
        out *= q_integer(n - j, qp) / q_integer(j + 1, qp)
    return out


def q_pochhammer(x: float, n: int, q: QLike) -> float:
    """(1+x)_q^n = (1+x)(1+qx)...(1+q^{n-1}x)."""
    qp = as_q(q)
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    return math.prod(1.0 + qp.q ** j * x for j in range(n))


def q_pochhammer_infinite(x: float, q: QLike,
                          policy: TruncationPolicy = DEFAULT_POLICY) -> Truncated:
    """(1+x)_q^inf, truncated once the factors deviate from 1 by less than tol."""
    qp = require_proper(q, "infinite q-Pochhammer product")
    lq = math.log(qp.q)

    def block(start, size):
        return x * np.exp(lq * np.arange(start, start + size))

    dev, used = truncated_series(block, policy, what="(1+x)_q^inf")
    return Truncated(float(np.prod(1.0 + dev)), used, StopReason.TOLERANCE)


def q_pochhammer_real(x: float, alpha: float, q: QLike,
                      policy: TruncationPolicy = DEFAULT_POLICY) -> Truncated:
    """(1+x)_q^alpha for real alpha, as (1+x)_q^inf / (1+q^alpha x)_q^inf."""
    qp = require_proper(q, "(1+x)_q^alpha")
    if x < 0:
        raise QDomainError(f"x must be nonnegative, got {x}")
    num = q_pochhammer_infinite(x, qp, policy)
    den = q_pochhammer_infinite(qp.q ** alpha * x, qp, policy)
    return Truncated(num.value / den.value, max(num.terms, den.terms), StopReason.TOLERANCE)


def _e_q_series_terms(z: float, qp: QParam, policy: TruncationPolicy) -> np.ndarray:
    q, lq = qp.q, math.log(qp.q)
    # term ratio q^k z/[k+1] shrinks monotonically; count small terms only past its peak
    warmup = 0
    while abs(q ** warmup * z) >= q_integer(warmup + 1, qp) and warmup < policy.max_terms:
        warmup += 1

    def block(start, size):
        k = np.arange(start, start + size)
        if z == 0:
            return (k == 0).astype(float)
        # log|q^{k(k-1)/2} z^k / [k]_q!| accumulated, sign tracked separately
        log_qint = np.log(-np.expm1(np.arange(1, start + size) * lq) / (1 - q))
        log_fact = np.concatenate([[0.0], np.cumsum(log_qint)])[k]
        mag = k * (k - 1) / 2 * lq + k * math.log(abs(z)) - log_fact
        sign = np.where((z < 0) & (k % 2 == 1), -1.0, 1.0)
        return sign * np.exp(mag)

    return truncated_series(block, policy, warmup, what="E_q series")[0]


def _e_q_series(z: float, qp: QParam, policy: TruncationPolicy) -> Truncated:
    terms = _e_q_series_terms(z, qp, policy)
    return Truncated(math.fsum(terms), len(terms), StopReason.TOLERANCE)


def big_e_q(z: float, q: QLike, policy: TruncationPolicy = DEFAULT_POLICY,
            cross_check: bool = True) -> Truncated:
    """E_q(z) = prod_j (1 + (1-q) q^j z), cross-checked against its power series.

    Negative ``z`` needs ``(1-q)|z| < 1`` so every factor stays positive.
    """
    qp = require_proper(q, "E_q")
    q = qp.q
    if z < 0 and (1.0 - q) * -z >= 1.0:
        raise QDomainError(f"E_q({z}) with q={q}: product factor would be <= 0")
    lq = math.log(q)

    def block(start, size):
        return (1.0 - q) * z * np.exp(lq * np.arange(start, start + size))

    dev, used = truncated_series(block, policy, what="E_q product")
    value = float(np.prod(1.0 + dev))
    if cross_check:
        terms = _e_q_series_terms(z, qp, policy)
        series = math.fsum(terms)
        # for z < 0 the series cancels; its rounding error scales with sum |terms|
        scale = max(1.0, float(np.sum(np.abs(terms))))
        if abs(series - value) > 10 * policy.tol * scale:
            raise TruncationError(
                f"E_q({z}), q={q}: product {value!r} and series {series!r} disagree")
    return Truncated(value, used, StopReason.TOLERANCE)


def _geometric_warmup(q: float, tol: float) -> int:
    # integrands may vanish near the upper endpoint; only count small terms
    # once the node weight q^n has fallen below sqrt(tol)
    return max(0, math.ceil(0.5 * math.log(tol) / math.log(q)))


def jackson_integral(f: Evaluable, a: float, q: QLike,
                     policy: TruncationPolicy = DEFAULT_POLICY) -> Truncated:
    """Jackson q-integral of ``f`` over [0, a]: (1-q) a sum_n f(a q^n) q^n."""
    qp = require_proper(q, "Jackson integral")
    if not a > 0:
        raise QDomainError(f"upper limit must be positive, got {a}")
    q, lq = qp.q, math.log(qp.q)

    def block(start, size):
        w = np.exp(lq * np.arange(start, start + size))
        return (1.0 - q) * a * w * evaluate(f, a * w)

    terms, used = truncated_series(block, policy, _geometric_warmup(q, policy.tol),
                                   what="Jackson integral")
    return Truncated(float(np.sum(terms)), used, StopReason.TOLERANCE)


def jackson_integral_improper(f: Evaluable, A: float, q: QLike,
                              policy: TruncationPolicy = DEFAULT_POLICY) -> Truncated:
    """Improper q-integral over [0, inf/A): (1-q) sum_{n in Z} f(q^n/A) q^n/A.

    Both tails are truncated independently; a tail that never drops below
    ``tol`` (or overflows) is reported as divergence.
    """
    qp = require_proper(q, "improper Jackson integral")
    if not A > 0:
        raise QDomainError(f"A must be positive, got {A}")
    q, lq = qp.q, math.log(qp.q)
    warmup = _geometric_warmup(q, policy.tol)

    def inner(start, size):
        node = np.exp(lq * np.arange(start, start + size)) / A
        return (1.0 - q) * node * evaluate(f, node)

    def outer(start, size):
        with np.errstate(over="ignore"):
            node = np.exp(-lq * np.arange(start + 1, start + size + 1)) / A
        if not np.all(np.isfinite(node)):
            raise TruncationError("improper Jackson integral diverges (nodes overflow)")
        return (1.0 - q) * node * evaluate(f, node)

    lo, n_lo = truncated_series(inner, policy, warmup, what="improper Jackson integral")
    hi, n_hi = truncated_series(outer, policy, warmup, what="improper Jackson integral")
    return Truncated(float(np.sum(lo) + np.sum(hi)), n_lo + n_hi, StopReason.TOLERANCE)
