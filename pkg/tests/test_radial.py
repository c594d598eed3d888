import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mtlab.modelgeom import unit_ball_volume, unit_sphere_area
from mtlab.radial import (ProfileTable, ball_volume_lower_bound, check_domination, cone_angle,
                          dominating_trumpet, euclidean_profile, euclidean_space, iso_invariants,
                          make_grid, profile_table, radial_profile, radial_space,
                          small_volume_bound_check, synthesize_from_profile, trumpet_space)


def test_grid_is_geometric_then_uniform():
    g = make_grid(5.0, 100)
    assert g[0] == 0.0 and g[-1] == pytest.approx(5.0)
    assert np.all(np.diff(g) > 0)
    steps = np.diff(g[1:])
    assert steps.max() <= 5.0 / 100 * (1 + 1e-12)
    assert steps[1] / steps[0] == pytest.approx(1.05, rel=1e-9)
    with pytest.raises(ValueError):
        make_grid(5.0, 8)


def test_trumpet_examples():
    s = trumpet_space(2, 1.0)
    assert np.allclose(s.warp, np.sinh(s.grid), rtol=1e-15, atol=0)
    s3 = trumpet_space(3, 0.5)
    oracle = float(mpmath.sqrt(0.5) * mpmath.sinh(1))
    assert s3.warp_at(1.0) == pytest.approx(oracle, rel=1e-6)
    assert oracle == pytest.approx(0.83099, abs=1e-5)
    for beta in (0.0, -0.5, 1.5):
        with pytest.raises(ValueError):
            trumpet_space(2, beta)


def test_radial_space_invariants():
    g = np.array([0.0, 0.5, 1.0])
    with pytest.raises(ValueError):
        radial_space(2, g, np.array([0.0, 0.5, -1.0]))
    with pytest.raises(ValueError):
        radial_space(2, np.array([0.0, 1.0, 0.5]), np.array([0.0, 0.5, 1.0]))
    with pytest.raises(ValueError):
        radial_space(1, g, g)


@given(n=st.integers(2, 4), r=st.floats(1e-6, 4.9))
@settings(max_examples=50, deadline=None)
def test_euclidean_volume_and_inverse(n, r):
    s = euclidean_space(n)
    assert s.volume_at(r) == pytest.approx(unit_ball_volume(n) * r**n, rel=1e-10)
    assert s.radius_of_volume(s.volume_at(r)) == pytest.approx(r, rel=1e-10)


def test_radial_profile_examples():
    s = euclidean_space(2)
    assert radial_profile(s, math.pi) == pytest.approx(2 * math.pi, rel=1e-10)
    tr = trumpet_space(2, 0.5)
    t = 1e-8
    assert radial_profile(tr, t) / (2 * (0.5 * math.pi) ** 0.5 * t**0.5) == pytest.approx(1.0, rel=1e-6)
    with pytest.raises(ValueError):
        radial_profile(s, 2 * s.capacity)
    with pytest.raises(ValueError):
        radial_profile(s, 0.0)


def test_trumpet_volume_against_mpmath():
    s = trumpet_space(3, 0.5)
    oracle = float(mpmath.quad(lambda x: 4 * mpmath.pi * 0.5 * mpmath.sinh(x) ** 2, [0, 2]))
    assert s.volume_at(2.0) == pytest.approx(oracle, rel=1e-10)


@given(n=st.integers(2, 3), beta=st.floats(0.05, 1.0))
@settings(max_examples=15, deadline=None)
def test_trumpet_profile_dominates_linear_and_asymptote(n, beta):
    s = trumpet_space(n, beta)
    table = profile_table(s, count=200)
    t, P = table.positive()
    assert np.all(P >= t)
    lead = n * (beta * unit_ball_volume(n)) ** (1 / n)
    assert P[0] / t[0] ** (1 - 1 / n) == pytest.approx(lead, rel=1e-4)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_euclidean_round_trip(n):
    s = synthesize_from_profile(euclidean_profile(n, np.geomspace(1e-10, unit_ball_volume(n) * 5.0**n, 400)), n)
    r = s.grid[(s.grid >= 0.01) & (s.grid <= 5.0)]
    assert np.max(np.abs(s.warp_at(r) / r - 1)) <= 1e-6
    assert s.meta["cone_angle"] == pytest.approx(1.0, rel=1e-9)


def test_hyperbolic_round_trip_and_cone_angle():
    h = trumpet_space(2, 1.0)
    table = profile_table(h, count=400)
    s = synthesize_from_profile(table, 2)
    t, P = table.positive()
    inner = t[t <= 0.999 * s.capacity]
    assert np.max(np.abs(radial_profile(s, inner) / radial_profile(h, inner) - 1)) <= 1e-5
    assert cone_angle(s).value == pytest.approx(1.0, abs=1e-3)
    r = s.grid[(s.grid > 0.01) & (s.grid < 0.95 * s.r_max)]
    assert np.max(np.abs(s.warp_at(r) / np.sinh(r) - 1)) <= 1e-5


def test_linear_tail_gives_exponential_warp():
    n, h = 2, 2.0
    t = np.geomspace(1e-8, 50.0, 500)
    A = n * unit_ball_volume(n) ** (1 / n)
    t0 = (A / h) ** n
    f = np.where(t < t0, A * t ** (1 - 1 / n), h * t)
    s = synthesize_from_profile(ProfileTable(t, f), n)
    r0 = float(s.radius_of_volume(2 * t0))
    r = np.linspace(r0, 0.95 * s.r_max, 20)
    expected = s.warp_at(r0) * np.exp(h * (r - r0) / (n - 1))
    assert np.allclose(s.warp_at(r), expected, rtol=1e-5)


def test_synthesis_rejects_bad_profiles():
    t = np.geomspace(1e-8, 1.0, 100)
    with pytest.raises(ValueError):
        synthesize_from_profile(ProfileTable(t, t), 2)


@pytest.mark.parametrize("beta", [0.25, 0.5, 1.0])
def test_cone_angle_of_trumpets(beta):
    assert cone_angle(trumpet_space(2, beta)).value == pytest.approx(beta, abs=1e-4)
    assert cone_angle(euclidean_space(3)).value == pytest.approx(1.0, abs=1e-12)


def test_synthesized_nonsingular_cone():
    n = 3
    alpha = n ** ((n - 1) / n) * unit_sphere_area(n) ** (1 / n)
    t = np.geomspace(1e-10, 100.0, 400)
    s = synthesize_from_profile(ProfileTable(t, alpha * t ** (1 - 1 / n)), n)
    assert s.meta["cone_angle"] == pytest.approx(1.0, rel=1e-12)
    assert cone_angle(s).value == pytest.approx(1.0, abs=1e-6)


@given(beta=st.floats(0.1, 1.0), n=st.integers(2, 3))
@settings(max_examples=10, deadline=None)
def test_self_domination(beta, n):
    s = trumpet_space(n, beta)
    rep = check_domination(profile_table(s, count=100), s)
    assert rep.dominated and rep.worst_gap == pytest.approx(0.0, abs=1e-9 * s.capacity)


def test_domination_planted_failure_and_euclidean():
    s = trumpet_space(2, 0.5)
    table = profile_table(s, count=100)
    low = ProfileTable(table.volumes, 0.9 * table.perimeters)
    assert not check_domination(low, s).dominated
    t = np.geomspace(1e-6, s.capacity, 2000)
    above = 2 * np.sqrt(math.pi * t) >= radial_profile(s, t)
    t_star = t[np.argmin(above)]
    assert 0 < t_star < s.capacity
    e = euclidean_profile(2, t[t < t_star])
    assert check_domination(e, s).dominated
    assert not check_domination(euclidean_profile(2, t), s).dominated
    with pytest.raises(ValueError):
        check_domination(ProfileTable(np.array([2 * s.capacity]), np.array([1.0])), s)


def test_iso_invariants_examples():
    t = np.geomspace(1e-10, 1e2, 400)
    inv = iso_invariants(euclidean_profile(2, t), m_range=(1, 2, 3))
    assert inv.ratios[2].value == pytest.approx(1.0, rel=1e-12)
    assert inv.iso_dimension == 2.0
    assert inv.ratios[1].value < 1e-3 and not inv.ratios[1].reliable
    tr = iso_invariants(profile_table(trumpet_space(3, 0.5), count=300), m_range=(2, 3, 4))
    assert tr.ratios[3].value == pytest.approx(0.5, rel=1e-4)
    assert tr.iso_dimension == 3.0


def test_iso_invariants_ignore_total_volume():
    t = np.geomspace(1e-10, 1.0, 300)
    P = euclidean_profile(2, t).perimeters
    a = iso_invariants(ProfileTable(t, P, 10.0), m_range=(2,))
    b = iso_invariants(ProfileTable(t, P, 20.0), m_range=(2,))
    assert a.ratios[2].value == b.ratios[2].value


def test_dominating_trumpet_examples():
    tr, f = dominating_trumpet(1.0, 1.0, 2)
    assert tr.beta == 1.0 and tr.n == 2
    t, P = f.positive()
    expected = (1 - 1e-3) * np.maximum(2 * np.sqrt(math.pi * t), t)
    assert np.allclose(P, expected, rtol=1e-14)
    with pytest.raises(ValueError):
        dominating_trumpet(1.0, 0.0, 2)
    with pytest.raises(ValueError):
        dominating_trumpet(0.0, 1.0, 2)


def test_dominating_trumpet_recovers_h2():
    h2 = trumpet_space(2, 1.0)
    table = profile_table(h2, count=300)
    inv = iso_invariants(table, m_range=(2,))
    tr, f = dominating_trumpet(inv.cheeger_slope, inv.ratios[2].value, 2, t_max=table.volumes[-1])
    s = synthesize_from_profile(f, 2)
    sub = ProfileTable(table.volumes[table.volumes <= s.capacity],
                       table.perimeters[table.volumes <= s.capacity])
    assert check_domination(sub, s).dominated


def test_small_volume_bound_examples():
    t = np.geomspace(1e-10, 1.0, 300)
    eu = small_volume_bound_check(euclidean_profile(2, t), 2)
    assert eu.holds and eu.C == pytest.approx(2 * math.sqrt(math.pi), rel=1e-12)
    lin = small_volume_bound_check(ProfileTable(t, t.copy()), 2)
    assert not lin.holds
    tr = small_volume_bound_check(profile_table(trumpet_space(2, 0.5), count=300), 2)
    assert tr.holds and tr.C == pytest.approx(2 * math.sqrt(0.5 * math.pi), rel=1e-3)
    assert tr.C <= 2 * math.sqrt(0.5 * math.pi)


def test_ball_volume_lower_bound_examples():
    t = np.geomspace(1e-10, 1.0, 300)
    r = 1e-6
    b = ball_volume_lower_bound(euclidean_profile(2, t), 2, r)
    assert b.bound == pytest.approx(math.pi * r**2, rel=1e-12) and not b.flagged
    assert b.displayed == pytest.approx(16 * math.pi * r**2, rel=1e-12)
    capped = ball_volume_lower_bound(euclidean_profile(2, t), 2, 1.0)
    assert capped.bound == capped.eta
    z = ball_volume_lower_bound(ProfileTable(t, t.copy()), 2, r)
    assert z.bound == 0.0 and z.flagged
    s = trumpet_space(2, 0.5)
    r = 1e-7
    tb = ball_volume_lower_bound(profile_table(s, count=300), 2, r)
    assert tb.bound < tb.eta
    assert tb.bound == pytest.approx(0.5 * math.pi * r**2, rel=1e-3)
    assert tb.bound <= s.volume_at(r)
