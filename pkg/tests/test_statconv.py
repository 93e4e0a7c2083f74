import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qbss.funcdsl import builtin
from qbss.qcore import q_integer
from qbss.statconv import (ALL, EVENS, KOROVKIN_COLUMNS, SQUARES, IndexSet, WeightedNorm,
                           condition_checks, korovkin_experiment, make_qsequence,
                           natural_density, ordinary_witnesses, st_lim_check,
                           weighted_korovkin_experiment)


def test_natural_density_examples():
    assert natural_density(ALL, 1000) == 1.0
    assert natural_density(SQUARES, 10_000) == 0.01
    assert natural_density(EVENS, 101) == 50 / 101
    with pytest.raises(ValueError):
        natural_density(SQUARES, 0)


@given(st.integers(1, 3000), st.integers(2, 9))
def test_density_complement(N, m):
    K = IndexSet(lambda j: j % m == 1, f"1 mod {m}")
    d = natural_density(K, N)
    assert 0 <= d <= 1
    assert natural_density(K.complement(), N) == pytest.approx(1 - d, abs=1e-15)


def test_st_lim_examples():
    r = st_lim_check(lambda j: 1 / j, 0, 0.01, [100, 1000, 10_000])
    assert r.column("density") == [1.0, 0.1, 0.01]
    assert r.meta["consistent_with_st_lim"]

    N = 5000
    sq = st_lim_check(lambda j: float(math.isqrt(j) ** 2 == j), 0, 0.5, [N])
    assert sq.column("density") == [math.isqrt(N) / N]

    alt = st_lim_check(lambda j: (-1.0) ** j, 0, 0.5, [10, 100, 1000])
    assert alt.column("density") == [1.0, 1.0, 1.0]
    assert not alt.meta["consistent_with_st_lim"]


def test_st_lim_accepts_scalar_only_callables_and_sequences():
    r1 = st_lim_check(lambda j: 1 / j if j > 3 else 5.0, 0, 0.5, [10])
    r2 = st_lim_check([5.0, 5.0, 5.0] + [1 / j for j in range(4, 11)], 0, 0.5, [10])
    assert r1.column("density") == r2.column("density") == [0.3]


def test_st_lim_validation():
    with pytest.raises(ValueError):
        st_lim_check(lambda j: j, 0, 0, [10])
    with pytest.raises(ValueError):
        st_lim_check(lambda j: j, 0, 0.1, [10, 5])
    with pytest.raises(ValueError):
        st_lim_check(lambda j: j, 0, 0.1, [])


def test_make_qsequence_examples():
    s = make_qsequence("plain", 0.5)
    assert s(4) == pytest.approx(0.5 ** 0.25, abs=1e-15)
    assert s(4) == pytest.approx(0.8408964152537145, abs=1e-15)
    assert s(4) ** 4 == pytest.approx(0.5, abs=1e-15)
    assert make_qsequence("plain", 0)(100) == 0.9
    stat = make_qsequence("statistical", 0)
    assert stat(9) == 0.5
    assert stat(10) == pytest.approx(1 - 1 / math.sqrt(10), abs=1e-15)
    with pytest.raises(ValueError):
        make_qsequence("plain", 1.0)
    with pytest.raises(ValueError):
        make_qsequence("lacunary", 0.5)


@pytest.mark.parametrize("a", [0.1, 0.5, 0.9])
def test_plain_power_is_exact(a):
    q = make_qsequence("plain", a).values(2000)
    n = np.arange(1, 2001)
    np.testing.assert_allclose(q ** n, a, atol=1e-12)


@pytest.mark.parametrize("kind", ["plain", "statistical"])
def test_sequences_stay_in_unit_interval(kind):
    for a in (0, 0.5):
        q = make_qsequence(kind, a).values(5000)
        assert np.all((q > 0) & (q < 1))


def test_exception_set_density_vanishes():
    stat = make_qsequence("statistical", 0.5)
    d = [natural_density(stat.exception_set, N) for N in (100, 10_000, 1_000_000)]
    assert d == sorted(d, reverse=True) and d[-1] == 0.001


def test_statistical_sequence_is_not_ordinarily_convergent():
    stat = make_qsequence("statistical", 0)
    for tail in (1000, 5000, 9000):
        assert ordinary_witnesses(stat, 1.0, 0.25, 10_000, tail)
    assert ordinary_witnesses(make_qsequence("plain", 0), 1.0, 0.25, 10_000) == []
    assert st_lim_check(stat.values(10_000), 1.0, 0.3, [100, 1000, 10_000]).meta[
        "consistent_with_st_lim"]


def test_condition_checks_a_half():
    # q_n^n -> a is exact off the squares, so all three checks pass at N = 10^4
    for kind in ("plain", "statistical"):
        checks = condition_checks(make_qsequence(kind, 0.5))
        assert set(checks) == {"q_n->1", "q_n^n->a", "1/[n]_q->0"}
        d = {k: r.meta["final_density"] for k, r in checks.items()}
        assert d["q_n^n->a"] <= 0.0101
        assert checks["q_n^n->a"].meta["consistent_with_st_lim"]


def test_condition_checks_measure_slow_convergence():
    # with q_n = 1 - 1/sqrt(n) the bad set for eps = 0.01 is {n < 10^4}; it
    # only thins out once N is well past that
    checks = condition_checks(make_qsequence("plain", 0), N=1_000_000,
                              N_grid=[10_000, 100_000, 1_000_000])
    assert checks["q_n->1"].column("density") == pytest.approx([1.0, 0.1, 0.01], abs=1e-5)
    assert checks["q_n->1"].meta["consistent_with_st_lim"]
    assert checks["q_n^n->a"].meta["consistent_with_st_lim"]


def test_korovkin_experiment_columns_and_closed_forms():
    qseq = make_qsequence("plain", 0.5)
    r = korovkin_experiment(qseq, (0, 0), 1.0, [4, 16, 64], builtin("sat"), points=51)
    assert r.columns == KOROVKIN_COLUMNS
    assert r.column("n") == [4, 16, 64]
    for row in r.rows:
        assert row["sup_err_e0"] <= 1e-8
        assert row["sup_err_e1"] == pytest.approx(row["q_n"] / q_integer(row["n"], row["q_n"]),
                                                  abs=1e-8)
    assert len(r.meta["term_counts"]) == 3
    errs = r.column("sup_err_f")
    assert errs == sorted(errs, reverse=True)


def test_korovkin_parallel_matches_serial():
    qseq = make_qsequence("statistical", 0)
    args = (qseq, (0.5, 1.0), 1.0, [4, 8, 16, 32], builtin("sinx"))
    serial = korovkin_experiment(*args, points=21, workers=1)
    parallel = korovkin_experiment(*args, points=21, workers=4)
    assert serial.to_csv() == parallel.to_csv()


def test_weighted_norm():
    norm = WeightedNorm()
    g = norm.grid()
    assert g[0] == 0 and g[-1] == pytest.approx(50) and np.all(np.diff(g) > 0)
    assert norm(np.ones_like(g), g) == 1.0
    with pytest.raises(ValueError):
        WeightedNorm(rho=lambda x: 0.5 + 0 * x)
    with pytest.raises(ValueError):
        WeightedNorm(domain_cap=1.0)


def test_weighted_korovkin_examples():
    qseq = make_qsequence("plain", 0.5)
    norm = WeightedNorm(domain_cap=20, linear_points=21, geometric_points=20)
    r0 = weighted_korovkin_experiment(qseq, (0, 0), lambda t: np.ones_like(t), norm, [4, 16])
    assert max(r0.column("weighted_err")) <= 1e-8
    r1 = weighted_korovkin_experiment(qseq, (0, 0), lambda t: t, norm, [4, 16])
    for row in r1.rows:
        assert row["weighted_err"] == pytest.approx(row["q_n"] / q_integer(row["n"], row["q_n"]),
                                                    abs=1e-8)
    # bounded f: tail bound 2 sup|f| / rho(X_max)
    rs = weighted_korovkin_experiment(qseq, (0, 0), builtin("sat"), norm, [4])
    assert rs.meta["tail_bound"] == pytest.approx(2 * (20 / 21) / 401, rel=1e-3)
