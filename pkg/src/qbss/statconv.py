"""Natural density, statistical limits and Korovkin-type convergence experiments.

Statistical convergence is an asymptotic notion; everything here works at a
finite horizon ``N`` and so yields heuristics, not proofs.  Reports always
carry the raw densities so a reader can judge the verdicts.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .operators import OperatorParams, apply_grid
from .qcore import DEFAULT_POLICY, Evaluable, TruncationPolicy, evaluate
from .report import ExperimentReport

# verdict thresholds for finite-horizon statistical limits
DENSITY_SLACK = 0.1
FINAL_DENSITY = 0.05
DEFAULT_X_POINTS = 201


@dataclass(frozen=True)
class IndexSet:
    membership: Callable[[int], bool]
    description: str

    def __contains__(self, j: int) -> bool:
        return bool(self.membership(j))

    def indicator(self, N: int) -> np.ndarray:
        """Membership of 1..N as a boolean array."""
        return np.fromiter((bool(self.membership(j)) for j in range(1, N + 1)), bool, N)

    def complement(self) -> "IndexSet":
        return IndexSet(lambda j: not self.membership(j), f"complement of {self.description}")


def _is_square(j: int) -> bool:
    r = math.isqrt(j)
    return r * r == j


ALL = IndexSet(lambda j: True, "all positive integers")
EVENS = IndexSet(lambda j: j % 2 == 0, "even integers")
SQUARES = IndexSet(_is_square, "perfect squares")
NAMED_SETS = {"all": ALL, "evens": EVENS, "squares": SQUARES}


def natural_density(index_set: IndexSet, N: int) -> float:
    """|{j <= N : j in K}| / N."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    return int(index_set.indicator(N).sum()) / N


SequenceLike = Union[Callable[[int], float], Sequence[float]]


def sequence_values(x: SequenceLike, N: int) -> np.ndarray:
    """x_1..x_N from a callable (vectorized when it accepts arrays) or a sequence."""
    if not callable(x):
        vals = np.asarray(x[:N], dtype=float)
        if len(vals) < N:
            raise ValueError(f"sequence has {len(vals)} terms, need {N}")
        return vals
    j = np.arange(1, N + 1)
    try:
        out = np.asarray(x(j), dtype=float)
        if out.shape == j.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([float(x(int(i))) for i in j])


def st_lim_check(x: SequenceLike, L: float, eps: float,
                 N_grid: Sequence[int]) -> ExperimentReport:
    """Density of {j <= N : |x_j - L| >= eps} along ``N_grid``.

    Verdict ``consistent_with_st_lim``: densities nonincreasing up to
    DENSITY_SLACK and the last one below FINAL_DENSITY.
    """
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    N_grid = [int(N) for N in N_grid]
    if not N_grid or any(b <= a for a, b in zip(N_grid, N_grid[1:])) or N_grid[0] < 1:
        raise ValueError("N_grid must be a nonempty increasing list of positive integers")
    vals = sequence_values(x, N_grid[-1])
    counts = np.cumsum(np.abs(vals - L) >= eps)
    report = ExperimentReport(["N", "density"])
    for N in N_grid:
        report.add(N=N, density=int(counts[N - 1]) / N)
    d = report.column("density")
    monotone = all(b <= a + DENSITY_SLACK for a, b in zip(d, d[1:]))
    report.meta.update(L=L, eps=eps, final_density=d[-1],
                       consistent_with_st_lim=bool(monotone and d[-1] < FINAL_DENSITY))
    return report


@dataclass(frozen=True)
class QSequence:
    """q_n = exception_value(n) on ``exception_set``, else generator(n)."""

    generator: Callable[[int], float]
    exception_set: IndexSet
    exception_value: Callable[[int], float]
    target_a: float
    kind: str = "plain"
    seed: int = 0

    def __call__(self, n: int) -> float:
        n = int(n)
        q = self.exception_value(n) if n in self.exception_set else self.generator(n)
        if not 0 < q < 1:
            raise ValueError(f"q_{n} = {q} is outside (0,1)")
        return q

    def values(self, N: int) -> np.ndarray:
        return np.array([self(n) for n in range(1, N + 1)])


NO_EXCEPTIONS = IndexSet(lambda j: False, "empty set")


def make_qsequence(kind: str, a: float, seed: int = 0) -> QSequence:
    """Sequences meant to satisfy st-lim q_n = 1, st-lim q_n^n = a, st-lim 1/[n] = 0.

    ``plain``: q_n = a^(1/n) for a > 0, else 1 - 1/sqrt(n).
    ``statistical``: the plain sequence with q_n = 1/2 on perfect squares,
    which converges statistically but not in the ordinary sense.
    The construction is deterministic; ``seed`` is only recorded.
    """
    if not 0 <= a < 1:
        raise ValueError(f"a must lie in [0,1), got {a}")
    if kind not in ("plain", "statistical"):
        raise ValueError(f"kind must be 'plain' or 'statistical', got {kind!r}")
    if a > 0:
        gen = lambda n: a ** (1.0 / n)  # noqa: E731
    else:
        # q_1 = 0 would leave (0,1); the first term is pinned to 1/2
        gen = lambda n: 1.0 - 1.0 / math.sqrt(n) if n > 1 else 0.5  # noqa: E731
    if kind == "plain":
        return QSequence(gen, NO_EXCEPTIONS, gen, a, kind, seed)
    return QSequence(gen, SQUARES, lambda n: 0.5, a, kind, seed)


def condition_checks(qseq: QSequence, N: int = 10_000, eps: float = 0.01,
                     N_grid: Sequence[int] | None = None) -> dict[str, ExperimentReport]:
    """st_lim_check for q_n -> 1, q_n^n -> a and 1/[n]_{q_n} -> 0."""
    N_grid = list(N_grid) if N_grid else [N // 100, N // 10, N]
    N_grid = [g for g in N_grid if g >= 1]
    q = qseq.values(N_grid[-1])
    n = np.arange(1, len(q) + 1)
    inv_nq = (1 - q) / -np.expm1(n * np.log(q))
    return {
        "q_n->1": st_lim_check(q, 1.0, eps, N_grid),
        "q_n^n->a": st_lim_check(q ** n, qseq.target_a, eps, N_grid),
        "1/[n]_q->0": st_lim_check(inv_nq, 0.0, eps, N_grid),
    }


def ordinary_witnesses(qseq: QSequence, L: float = 1.0, eps: float = 0.25,
                       N: int = 10_000, tail_from: int | None = None) -> list[int]:
    """Indices n in (tail_from, N] with |q_n - L| >= eps.

    A nonempty list for every tail start is evidence against ordinary
    convergence to L.
    """
    tail_from = N // 2 if tail_from is None else tail_from
    q = qseq.values(N)
    return [int(n) for n in np.nonzero(np.abs(q - L) >= eps)[0] + 1 if n > tail_from]


def _x_grid(nu: float, points: int) -> np.ndarray:
    return np.linspace(0.0, nu, points)


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))  # map preserves input order


KOROVKIN_COLUMNS = ["n", "q_n", "sup_err_e0", "sup_err_e1", "sup_err_e2", "sup_err_f"]


def korovkin_experiment(qseq: QSequence, params_template: tuple[float, float], nu: float,
                        n_grid: Sequence[int], f: Evaluable,
                        policy: TruncationPolicy = DEFAULT_POLICY,
                        points: int = DEFAULT_X_POINTS, workers: int = 1) -> ExperimentReport:
    """Sup-norm errors on [0, nu] for f and the test functions 1, t, t^2."""
    if not nu > 0:
        raise ValueError(f"nu must be positive, got {nu}")
    alpha, beta = params_template
    xs = _x_grid(nu, points)
    fx = evaluate(f, xs)
    tests = [lambda t: np.ones_like(t), lambda t: t, lambda t: t * t, f]
    exact = [np.ones_like(xs), xs, xs * xs, fx]

    def row(n):
        q = qseq(n)
        params = OperatorParams(n, q, alpha, beta)
        audits = apply_grid(params, tests, xs, policy)
        vals = np.array([[a.value for a in per_x] for per_x in audits]).T
        errs = [float(np.max(np.abs(vals[i] - exact[i]))) for i in range(4)]
        k = max(a[0].k_terms for a in audits)
        j = max(a[0].max_j_terms for a in audits)
        return dict(zip(KOROVKIN_COLUMNS, [int(n), q, *errs])), {"n": int(n), "k_terms": k, "max_j_terms": j}

    results = _map(row, list(n_grid), workers)
    report = ExperimentReport(list(KOROVKIN_COLUMNS))
    for r, _ in results:
        report.add(**r)
    report.meta.update(nu=nu, x_points=points, alpha=alpha, beta=beta,
                       qseq={"kind": qseq.kind, "a": qseq.target_a, "seed": qseq.seed},
                       policy=policy.as_dict(), term_counts=[t for _, t in results])
    return report


def rho0(x):
    return 1.0 + np.asarray(x, dtype=float) ** 2


@dataclass(frozen=True)
class WeightedNorm:
    """Weighted sup-norm sup |g|/rho over [0, domain_cap]."""

    rho: Callable = rho0
    domain_cap: float = 50.0
    linear_points: int = 101
    geometric_points: int = 100
    linear_to: float = 2.0

    def __post_init__(self):
        if not self.domain_cap > self.linear_to:
            raise ValueError("domain_cap must exceed the linear part of the grid")
        if np.any(evaluate(self.rho, self.grid()) < 1):
            raise ValueError("weight function must be >= 1 on the grid")

    def grid(self) -> np.ndarray:
        """Uniform on [0, linear_to], geometric on [linear_to, domain_cap]."""
        lin = np.linspace(0.0, self.linear_to, self.linear_points)
        geo = np.geomspace(self.linear_to, self.domain_cap, self.geometric_points)
        return np.unique(np.concatenate([lin, geo]))

    def __call__(self, g_values: np.ndarray, xs: np.ndarray) -> float:
        return float(np.max(np.abs(g_values) / evaluate(self.rho, xs)))


def weighted_korovkin_experiment(qseq: QSequence, params_template: tuple[float, float],
                                 f: Evaluable, norm: WeightedNorm, n_grid: Sequence[int],
                                 policy: TruncationPolicy = DEFAULT_POLICY,
                                 workers: int = 1) -> ExperimentReport:
    """Weighted errors ||D_n f - f||_rho with the sup taken on [0, X_max]."""
    alpha, beta = params_template
    xs = norm.grid()
    fx = evaluate(f, xs)
    f_sup = float(np.max(np.abs(fx)))

    def row(n):
        q = qseq(n)
        audits = apply_grid(OperatorParams(n, q, alpha, beta), [f], xs, policy)
        vals = np.array([a[0].value for a in audits])
        k = max(a[0].k_terms for a in audits)
        return {"n": int(n), "q_n": q, "weighted_err": norm(vals - fx, xs)}, {"n": int(n), "k_terms": k}

    results = _map(row, list(n_grid), workers)
    report = ExperimentReport(["n", "q_n", "weighted_err"])
    for r, _ in results:
        report.add(**r)
    report.meta.update(
        X_max=norm.domain_cap, grid_points=len(xs), alpha=alpha, beta=beta,
        qseq={"kind": qseq.kind, "a": qseq.target_a, "seed": qseq.seed},
        # |D f - f|/rho beyond X_max is at most 2 sup|f| / rho(X_max)
        tail_bound=2 * f_sup / float(evaluate(norm.rho, np.array([norm.domain_cap]))[0]),
        policy=policy.as_dict(), term_counts=[t for _, t in results])
    return report
