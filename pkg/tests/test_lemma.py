import logging
import math

import numpy as np
import pytest

from revlattice.arith import build_tables
from revlattice.lemma import (
    LemmaInstance,
    ResolutionError,
    build_M,
    exponent_E,
    iterated_log,
    lambda_exponent,
    maximize_E,
    random_instance,
    resonance_shape,
    rhs_bound,
    search_witness,
    select_lambda,
)
from revlattice.spectrum import build_series


def inst(**kw):
    base = dict(f=[1.0], lam=[1.0], Lambda=1.0, L=3, M=[0], T=100.0)
    base.update(kw)
    return LemmaInstance(**base)


def test_rhs_example():
    assert rhs_bound(inst()) == pytest.approx(1 / 8 - 1 / 2 - 2 / (100 * math.pi**2))
    assert rhs_bound(inst()) == pytest.approx(-0.3770, abs=1e-4)


def test_rhs_empty_M_nonpositive():
    assert rhs_bound(inst(M=[])) <= 0


def test_rhs_linear_in_f():
    rng = np.random.default_rng(1)
    a = random_instance(rng)
    b = LemmaInstance(f=2 * a.f, lam=a.lam, Lambda=a.Lambda, L=a.L, M=a.M, T=a.T)
    assert rhs_bound(b) == pytest.approx(2 * rhs_bound(a))


def test_rhs_monotone():
    f = [0.5, 1.0, 0.7, 0.2]
    lam = [0.6, 0.9, 1.2, 5.0]
    small = LemmaInstance(f=f, lam=lam, Lambda=1.0, L=3, M=[1], T=16.0)
    big = LemmaInstance(f=f, lam=lam, Lambda=1.0, L=3, M=[0, 1, 2], T=16.0)
    assert rhs_bound(big) >= rhs_bound(small)
    tail = LemmaInstance(f=f + [0.3], lam=lam + [1.1e1], Lambda=1.0, L=3, M=[1], T=16.0)
    assert rhs_bound(tail) <= rhs_bound(small)
    low = LemmaInstance(f=[0.3] + f, lam=[0.1] + lam, Lambda=1.0, L=3, M=[2], T=16.0)
    assert rhs_bound(low) <= rhs_bound(small)


@pytest.mark.parametrize("bad", [
    dict(f=[-1.0]),
    dict(lam=[2.0, 1.0], f=[1.0, 1.0]),
    dict(M=[3]),
    dict(Lambda=5.0),
    dict(L=1),
    dict(T=1.0),
])
def test_instance_validation(bad):
    with pytest.raises(ValueError):
        inst(**bad)


def test_conforming_flag():
    assert not inst(T=100.0).conforming
    assert inst(T=324.0).conforming
    assert inst().interval == (50.0, 18.0**2 * 100.0)


def test_single_frequency_witness():
    w = search_witness(inst(T=2.0))
    assert w.met and w.full_searched
    assert w.sum_value == pytest.approx(1.0, abs=1e-12)
    assert w.interval[0] <= w.t <= w.interval[1]


def test_zero_weights_met():
    w = search_witness(inst(f=[0.0], T=2.0), budget=50)
    assert w.sum_value == 0.0 == w.rhs_bound
    assert w.met


def test_resolution_guard():
    with pytest.raises(ResolutionError):
        search_witness(inst(T=2.0), grid_step=0.3)


def test_budget_recorded():
    w = search_witness(inst(T=100.0), budget=1000)
    assert not w.full_searched
    assert w.evaluated == 1000
    assert w.interval[1] == pytest.approx(50.0 + 999 * w.grid_step)


def test_witness_dominates_grid():
    rng = np.random.default_rng(4)
    i = random_instance(rng, max_M=1)
    w = search_witness(i, budget=20000, keep_scan=True)
    ts, vals = w.scan
    assert w.sum_value >= vals.max() - 1e-12
    assert w.interval[0] <= w.t <= w.interval[1]


def test_workers_do_not_change_witness():
    rng = np.random.default_rng(9)
    i = random_instance(rng, max_M=2)
    a = search_witness(i, budget=40000, workers=1)
    b = search_witness(i, budget=40000, workers=2)
    assert (a.t, a.sum_value) == (b.t, b.sum_value)


def test_random_instances_hypotheses():
    rng = np.random.default_rng(0)
    for _ in range(30):
        i = random_instance(rng)
        lm = i.lam[list(i.M)]
        assert np.all((lm >= i.Lambda / 2) & (lm <= 1.5 * i.Lambda))
        assert 1 <= len(i.M) <= 4 and i.T == 16.0 and i.L == 3


def test_exponents():
    assert exponent_E(math.sqrt(2)) == pytest.approx(2 / 3 * (math.sqrt(2) - 1), abs=1e-12)
    assert exponent_E(1.0) == pytest.approx(math.log(2) / 3, abs=1e-12)
    assert maximize_E() == pytest.approx(math.sqrt(2), abs=1e-10)
    assert lambda_exponent(math.sqrt(2)) == pytest.approx(
        (1 - math.sqrt(2) + math.sqrt(2) * math.log(2 * math.sqrt(2))) / 3)
    with pytest.raises(ValueError):
        exponent_E(0.0)


def test_maximize_E_matches_dense_search():
    beta = np.linspace(0.5, 3.0, 200001)
    vals = np.array([exponent_E(b) for b in beta[::100]])
    assert abs(beta[::100][np.argmax(vals)] - maximize_E()) < 2e-3
    # adding a constant to E leaves its argmax alone
    shifted = vals + 7.0
    assert np.argmax(shifted) == np.argmax(vals)


def test_select_lambda():
    T = 1e6
    assert select_lambda(T, c0=2.0) == pytest.approx(2 * select_lambda(T, c0=1.0))
    ee = math.exp(math.e)
    T = math.exp(ee)
    l1, l2 = math.log(T), math.log(math.log(T))
    expect = l1 ** (1 / 3) * l2 ** lambda_exponent(math.sqrt(2))
    assert select_lambda(T) == pytest.approx(expect, rel=1e-12)


def test_iterated_log_clamps(caplog):
    with caplog.at_level(logging.WARNING):
        assert iterated_log(2.0, 2) == 1.0
    assert "clamped" in caplog.text
    assert iterated_log(1e10, 1) == pytest.approx(math.log(1e10))
    with pytest.raises(ValueError):
        iterated_log(0.5, 2, clamp=False)


def test_resonance_shape_positive():
    assert resonance_shape(1e4) > 0


def test_build_M_membership(sphere):
    T = 1e4
    tables = build_tables(3000)
    series = build_series(sphere, tables, T)
    for Lam in (2.9, 4.0, 6.5):
        rep = build_M(sphere, tables, series, Lam, math.sqrt(2), 3, T)
        assert rep.size == rep.product_size
        for i in rep.indices:
            ell, m3 = int(series.ell[i]), int(series.m3[i])
            assert tables.in_a1(ell) and tables.omega_of(ell) == rep.K
            assert rep.m3_values[0] <= m3 <= rep.m3_values[-1]
            assert Lam / 2 <= series.lam[i] <= 1.5 * Lam
            assert series.lam[i] == pytest.approx(math.sqrt(ell + m3 * m3))
        assert rep.stretch == 18.0 ** (rep.size + 1)


def test_build_M_empty_for_tiny_lambda(sphere):
    tables = build_tables(3000)
    series = build_series(sphere, tables, 1e4)
    rep = build_M(sphere, tables, series, 0.6, math.sqrt(2), 3, 1e4)
    assert rep.size == 0 and rep.indices == ()
