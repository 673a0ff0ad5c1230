import math

import numpy as np
import pytest
from sympy import factorint

from revlattice.arith import (
    LimitExceeded,
    build_tables,
    cardinality_check,
    enumerate_S,
    predicted_cardinality,
    primes_upto,
    r3,
    r3_partial,
    ratio_spread,
    resonance_K,
    stirling_shape,
    window_bounds,
)


@pytest.fixture(scope="module")
def tables():
    return build_tables(10**4)


def brute_r2(limit):
    out = np.zeros(limit + 1, dtype=np.int64)
    b = math.isqrt(limit)
    for x in range(-b, b + 1):
        for y in range(-b, b + 1):
            n = x * x + y * y
            if n <= limit:
                out[n] += 1
    return out


def brute_a1(n):
    return n >= 1 and all(p % 4 == 1 for p in factorint(n))


def test_examples(tables):
    assert [int(tables.r(n)) for n in range(6)] == [1, 4, 4, 0, 4, 8]
    assert int(tables.r(25)) == 12
    assert int(tables.omega_of(30)) == 3
    assert tables.in_a1(65) and tables.in_a1(1) and not tables.in_a1(30)
    assert r3(tables, 1) == 6 and r3(tables, 2) == 12 and r3(tables, 7) == 0


def test_r2_brute(tables):
    assert np.array_equal(tables.r2, brute_r2(10**4))


def test_a1_and_omega_brute(tables):
    for n in range(1, 10**4 + 1):
        f = factorint(n)
        assert bool(tables.a1[n]) == brute_a1(n)
        assert int(tables.omega[n]) == len(f)
        assert int(tables.spf[n]) == (min(f) if f else 0)


def test_r3_triple_enumeration(tables):
    lim = 1000
    b = math.isqrt(lim)
    m = np.arange(-b, b + 1)
    s = (m[:, None, None] ** 2 + m[None, :, None] ** 2 + m[None, None, :] ** 2).ravel()
    brute = np.bincount(s[s <= lim], minlength=lim + 1)
    assert [r3(tables, n) for n in range(lim + 1)] == brute.tolist()
    assert np.array_equal(tables.r3_table()[: lim + 1], brute)


def test_r3_partial_growth(tables):
    v = r3_partial(tables, 10**4) / 10**6
    assert 4.0 <= v <= 4.4
    assert r3_partial(tables, 10**4) == int(tables.r3_table()[1:].sum())


def test_a1_closed_under_products(tables):
    members = np.flatnonzero(tables.a1[:101]).tolist()
    for a in members:
        for b in members:
            if a * b <= tables.limit:
                assert tables.in_a1(a * b)


def test_r_at_least_two_to_omega_on_a1(tables):
    n = np.flatnonzero(tables.a1)
    assert np.all(tables.r2[n] >= 4 * 2 ** tables.omega[n].astype(np.int64))
    assert np.all(tables.r2[n] >= 2 ** tables.omega[n].astype(np.int64))


def test_segmented_matches_full(tables):
    seg = build_tables(9000, lo=7000)
    sl = slice(7000, 9001)
    assert np.array_equal(seg.r2, tables.r2[sl])
    assert np.array_equal(seg.omega, tables.omega[sl])
    assert np.array_equal(seg.a1, tables.a1[sl])


def test_window_and_S(tables):
    assert window_bounds(10.0, 0.5, 1.0) == (25, 100)
    S = enumerate_S(tables, 10.0, 1, 0.5, 1.0)
    assert S == [n for n in range(25, 101) if brute_a1(n) and len(factorint(n)) == 1]
    assert enumerate_S(tables, 0.5, 1, 0.5, 0.9) == []


def test_limits():
    with pytest.raises(LimitExceeded):
        build_tables(10**8 + 1)
    t = build_tables(100)
    with pytest.raises(LimitExceeded):
        t.r(101)
    with pytest.raises(LimitExceeded):
        r3_partial(t, 500)


def test_primes():
    assert primes_upto(30).tolist() == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]


def test_prediction_and_stirling():
    assert resonance_K(100.0, math.sqrt(2)) == 2
    assert predicted_cardinality(math.e, 0) is None
    for K in range(3, 12):
        ratio = math.factorial(K - 1) / (math.sqrt(2 * math.pi) * stirling_shape(K))
        assert 1.0 < ratio < 1.15


def test_cardinality_rows_reverify(tables):
    rows = cardinality_check(None, [20.0, 40.0], math.sqrt(2), 0.39, 1.02)
    for row in rows:
        lo, hi = window_bounds(row.lam, 0.39, 1.02)
        tab = build_tables(hi, lo=lo)
        members = enumerate_S(tab, row.lam, row.K, 0.39, 1.02)
        assert row.card == len(members)
        for n in members:
            assert brute_a1(n) and len(factorint(n)) == row.K
    assert ratio_spread(rows) >= 1.0
