import itertools
import math

import numpy as np
import pytest
from builders import dominated_complete_graph
from hypothesis import given, settings, strategies as st

from mtlab.discrete import (DiscreteMMS, best_shift, buser_data, cheeger_constant,
                            cheeger_energy, cheeger_inequality_check, cheeger_report,
                            coarea_compatible, iso_profile_bruteforce, perimeter, random_mms,
                            rayleigh_quotient, slope, spectral_gap)
from mtlab.errors import BudgetError
from mtlab.radial import radial_profile, trumpet_space


def path(k, w=1.0, d=1.0):
    return DiscreteMMS(np.ones(k), np.array([(i, i + 1, d, w) for i in range(k - 1)]), f"P{k}")


def cycle(k):
    return DiscreteMMS(np.ones(k), np.array([(i, (i + 1) % k, 1.0, 1.0) for i in range(k)]), f"C{k}")


K2 = DiscreteMMS(np.ones(2), np.array([(0, 1, 1.0, 1.0)]), "K2")


def test_invariants():
    with pytest.raises(ValueError):
        DiscreteMMS(np.array([1.0, 0.0]), np.array([(0, 1, 1.0, 1.0)]))
    with pytest.raises(ValueError):
        DiscreteMMS(np.ones(3), np.array([(0, 1, 1.0, 1.0)]))
    with pytest.raises(ValueError):
        DiscreteMMS(np.ones(2), np.array([(0, 1, 1.0, 1.0), (1, 0, 1.0, 1.0)]))
    with pytest.raises(ValueError):
        DiscreteMMS(np.ones(2), np.array([(0, 1, 0.0, 1.0)]))
    with pytest.raises(ValueError):
        DiscreteMMS(np.ones(2), np.array([(0, 2, 1.0, 1.0)]))


def test_perimeter_examples():
    p3 = path(3)
    assert perimeter(p3, []) == 0.0 and perimeter(p3, [0, 1, 2]) == 0.0
    assert perimeter(p3, [1]) == 2.0
    assert perimeter(cycle(4), [0, 1]) == 2.0


def test_slope_and_energy():
    f = np.array([0.0, 1.0, 3.0])
    assert np.array_equal(slope(path(3), f), [1.0, 2.0, 2.0])
    assert cheeger_energy(path(3), f, 2) == pytest.approx(9.0, rel=1e-15)


@given(seed=st.integers(0, 10**6), size=st.integers(2, 8))
@settings(max_examples=60, deadline=None)
def test_cut_symmetry_and_weight_monotonicity(seed, size):
    rng = np.random.default_rng(seed)
    s = random_mms(rng, size)
    A = rng.random(size) < 0.5
    assert perimeter(s, A) == pytest.approx(perimeter(s, ~A), rel=1e-14, abs=1e-15)
    heavier = DiscreteMMS(s.measures, s.edges * np.array([1, 1, 1, 1.5]))
    assert perimeter(heavier, A) >= perimeter(s, A)


def test_profile_examples():
    k2 = iso_profile_bruteforce(K2)
    assert np.array_equal(k2.volumes, [1.0]) and np.array_equal(k2.perimeters, [1.0])
    c4 = iso_profile_bruteforce(cycle(4))
    assert np.array_equal(c4.volumes, [1.0, 2.0, 3.0])
    assert np.array_equal(c4.perimeters, [2.0, 2.0, 2.0])
    assert c4.total_volume == 4.0


def test_profile_matches_naive_enumeration():
    rng = np.random.default_rng(3)
    s = random_mms(rng, 7)
    table = iso_profile_bruteforce(s)
    best = {}
    for k in range(1, 7):
        for A in itertools.combinations(range(7), k):
            m = round(float(s.measures[list(A)].sum()), 10)
            best[m] = min(best.get(m, math.inf), perimeter(s, list(A)))
    assert np.allclose(table.volumes, sorted(best), rtol=1e-12)
    assert np.allclose(table.perimeters, [best[m] for m in sorted(best)], rtol=1e-12)


def test_budget_error():
    big = path(25)
    with pytest.raises(BudgetError):
        iso_profile_bruteforce(big)
    with pytest.raises(BudgetError):
        cheeger_constant(big)


def test_cheeger_examples():
    assert cheeger_constant(K2).h == 1.0
    c4 = cheeger_constant(cycle(4))
    assert c4.h == 1.0 and len(c4.witness) == 2
    assert perimeter(cycle(4), list(c4.witness)) == 2.0
    doubled = cheeger_constant(cycle(4).scaled(measure=2.0))
    assert doubled.h == pytest.approx(0.5, rel=1e-15)


@given(seed=st.integers(0, 10**6), size=st.integers(2, 9))
@settings(max_examples=40, deadline=None)
def test_cheeger_consistent_with_profile(seed, size):
    s = random_mms(np.random.default_rng(seed), size)
    rep = cheeger_constant(s)
    table = iso_profile_bruteforce(s)
    half = table.volumes <= s.total_measure / 2 * (1 + 1e-12)
    assert rep.h == pytest.approx(np.min(table.perimeters[half] / table.volumes[half]), rel=1e-10)
    assert 2 * s.measures[list(rep.witness)].sum() <= s.total_measure * (1 + 1e-12)


def test_spectral_gap_examples():
    assert rayleigh_quotient(K2, np.array([1.0, -1.0]), 2) == pytest.approx(4.0, rel=1e-15)
    assert np.isnan(rayleigh_quotient(K2, np.array([1.0, 1.0]), 2))
    assert spectral_gap(K2, 2.0).value == pytest.approx(4.0, rel=1e-10)
    with pytest.raises(ValueError):
        spectral_gap(K2, 1.0)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_spectral_gap_length_scaling(p):
    s = random_mms(np.random.default_rng(5), 6)
    base = spectral_gap(s, p).value
    doubled = spectral_gap(s.scaled(length=2.0), p).value
    assert doubled == pytest.approx(2.0**-p * base, rel=1e-6)


@given(seed=st.integers(0, 10**6), p=st.floats(1.2, 4.0), shift=st.floats(-100, 100))
@settings(max_examples=60, deadline=None)
def test_rayleigh_shift_invariance(seed, p, shift):
    rng = np.random.default_rng(seed)
    s = random_mms(rng, 6)
    f = rng.standard_normal(6)
    assert rayleigh_quotient(s, f + shift, p) == pytest.approx(rayleigh_quotient(s, f, p), rel=1e-8)


@given(seed=st.integers(0, 10**6), p=st.floats(1.1, 4.0))
@settings(max_examples=60, deadline=None)
def test_best_shift_is_minimizer(seed, p):
    rng = np.random.default_rng(seed)
    f, mu = rng.standard_normal(7), rng.uniform(0.1, 2.0, 7)
    c = float(best_shift(f, mu, p))
    cost = lambda x: float(np.sum(mu * np.abs(f - x) ** p))  # noqa: E731
    for dx in (1e-4, -1e-4):
        assert cost(c) <= cost(c + dx) * (1 + 1e-12)


def test_cheeger_inequality_examples():
    rep = cheeger_inequality_check(K2, 2.0)
    assert rep.h == 1.0 and rep.lambda_p_estimate == pytest.approx(4.0, rel=1e-10) and rep.holds
    assert cheeger_inequality_check(path(4), 2.0).holds


def test_cheeger_inequality_random_sweep():
    rng = np.random.default_rng(31)
    for k in range(100):
        s = random_mms(rng, int(rng.integers(2, 9)))
        assert coarea_compatible(s)
        rep = cheeger_report(s, restarts=6, iters=200, seed=k)
        assert all(rep.inequality_holds.values()), (k, rep)


def test_coarea_compatibility():
    assert coarea_compatible(K2)
    assert not coarea_compatible(path(3, w=3.0))
    raw = random_mms(np.random.default_rng(2), 6, density=1.0, compatible=False)
    fixed = random_mms(np.random.default_rng(2), 6, density=1.0)
    assert coarea_compatible(fixed)
    assert np.array_equal(raw.edges[:, :3], fixed.edges[:, :3])


def test_buser_data():
    b = buser_data(K2, 2.0)
    assert b.h == 1.0 and b.lambda_p_estimate <= 4.0 + 1e-9
    assert b.ratio == pytest.approx(b.lambda_p_estimate / 2.0, rel=1e-15)
    half = buser_data(K2.scaled(measure=2.0), 2.0)
    assert half.h == 0.5 and math.isfinite(half.ratio)


def test_dominated_builder_profile():
    T = trumpet_space(2, 0.5)
    g = dominated_complete_graph(T)
    table = iso_profile_bruteforce(g)
    assert np.all(table.perimeters >= radial_profile(T, table.volumes) * (1 - 1e-12))
    assert coarea_compatible(g)
