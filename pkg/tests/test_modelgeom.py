import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mtlab.modelgeom import (GrowthSamples, ModelSpace, asymptotic_growth_ratio, bishop_gromov_check,
                             model_ball_volume, model_sphere_area, sn, unit_ball_volume,
                             unit_sphere_area)
from mtlab.radial import trumpet_space


def test_unit_ball_volume_small_dimensions():
    assert unit_ball_volume(1) == pytest.approx(2.0, rel=1e-15)
    assert unit_ball_volume(2) == pytest.approx(math.pi, rel=1e-15)
    assert unit_ball_volume(3) == pytest.approx(4 * math.pi / 3, rel=1e-15)
    assert unit_sphere_area(2) == pytest.approx(2 * math.pi, rel=1e-15)
    assert unit_sphere_area(3) == pytest.approx(4 * math.pi, rel=1e-15)


def test_unit_ball_volume_rejects_zero():
    with pytest.raises(ValueError):
        unit_ball_volume(0)


@pytest.mark.parametrize("n", range(1, 12))
def test_unit_ball_volume_against_mpmath(n):
    oracle = mpmath.pi ** (mpmath.mpf(n) / 2) / mpmath.gamma(mpmath.mpf(n) / 2 + 1)
    assert unit_ball_volume(n) == pytest.approx(float(oracle), rel=1e-14)


def test_sphere_area_examples():
    assert model_sphere_area(ModelSpace(2, 0.0), 1.0) == pytest.approx(2 * math.pi, rel=1e-14)
    # oracle: 2 pi sinh(1) in extended precision
    oracle = float(2 * mpmath.pi * mpmath.sinh(1))
    assert model_sphere_area(ModelSpace(2, -1.0), 1.0) == pytest.approx(oracle, rel=1e-14)
    assert oracle == pytest.approx(7.38401, abs=1e-5)
    assert model_sphere_area(ModelSpace(3, 1.0), math.pi / 2) == pytest.approx(4 * math.pi, rel=1e-14)


def test_ball_volume_examples():
    assert model_ball_volume(ModelSpace(2, 0.0), 2.0) == pytest.approx(4 * math.pi, rel=1e-14)
    oracle = float(mpmath.quad(lambda r: 2 * mpmath.pi * mpmath.sinh(r), [0, 1]))
    assert model_ball_volume(ModelSpace(2, -1.0), 1.0) == pytest.approx(oracle, rel=1e-12)
    assert oracle == pytest.approx(3.41228, abs=1e-5)
    assert model_ball_volume(ModelSpace(3, 0.0), 1.0) == pytest.approx(4 * math.pi / 3, rel=1e-14)


def test_horizon_errors():
    m = ModelSpace(2, 1.0)
    assert math.isinf(ModelSpace(3, -2.0).T)
    with pytest.raises(ValueError):
        model_sphere_area(m, m.T)
    with pytest.raises(ValueError):
        model_ball_volume(m, 1.01 * m.T)
    assert model_ball_volume(m, m.T) == pytest.approx(4 * math.pi, rel=1e-10)


@given(n=st.integers(2, 5), k=st.floats(-2, 2), r=st.floats(0.05, 1.2))
@settings(max_examples=60, deadline=None)
def test_volume_derivative_is_area(n, k, r):
    m = ModelSpace(n, k)
    r = min(r, 0.9 * m.T)
    h = 1e-5 * r
    fd = (model_ball_volume(m, r + h) - model_ball_volume(m, r - h)) / (2 * h)
    assert fd == pytest.approx(model_sphere_area(m, r), rel=1e-6)


@given(n=st.integers(2, 6), r=st.floats(1e-3, 10))
@settings(max_examples=60, deadline=None)
def test_flat_closed_forms(n, r):
    m = ModelSpace(n, 0.0)
    assert model_ball_volume(m, r) == pytest.approx(unit_ball_volume(n) * r**n, rel=1e-13)
    assert model_sphere_area(m, r) == pytest.approx(n * unit_ball_volume(n) * r ** (n - 1), rel=1e-13)


@given(n=st.integers(2, 5), k1=st.floats(-2, 2), dk=st.floats(0.01, 2), r=st.floats(0.01, 1.0))
@settings(max_examples=60, deadline=None)
def test_volume_decreases_with_curvature(n, k1, dk, r):
    a, b = ModelSpace(n, k1), ModelSpace(n, k1 + dk)
    r = min(r, 0.9 * b.T)
    assert model_ball_volume(a, r) >= model_ball_volume(b, r) * (1 - 1e-12)


def _model_samples(m, count=60):
    top = min(3.0, 0.95 * m.T)
    r = np.linspace(top / count, top, count)
    return GrowthSamples(r, model_ball_volume(m, r), model_sphere_area(m, r))


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("k", [-1.0, 0.0, 1.0])
def test_bishop_gromov_exact_model(n, k):
    rep = bishop_gromov_check(_model_samples(ModelSpace(n, k)), ModelSpace(n, k))
    assert rep.monotone_volume_ratio and rep.perimeter_ratio_monotone and rep.perimeter_leq_volume_ratio
    assert rep.worst_violation <= 1e-12


def test_bishop_gromov_planted_violation():
    m = ModelSpace(2, 0.0)
    g = _model_samples(m)
    vols = g.ball_volumes.copy()
    vols[30] *= 1.05
    vols[30] = min(vols[30], vols[31])
    rep = bishop_gromov_check(GrowthSamples(g.radii, vols), m)
    assert not rep.monotone_volume_ratio
    assert rep.worst_violation > 0


def test_bishop_gromov_hyperbolic_trumpet():
    s = trumpet_space(3, 1.0)
    r = np.linspace(0.05, 4.0, 80)
    g = GrowthSamples(r, s.volume_at(r), s.perimeter_at(r))
    rep = bishop_gromov_check(g, ModelSpace(3, -1.0), rtol=1e-7)
    assert rep.monotone_volume_ratio and rep.perimeter_ratio_monotone and rep.perimeter_leq_volume_ratio


def test_bishop_gromov_needs_two_samples():
    with pytest.raises(ValueError):
        bishop_gromov_check(GrowthSamples([1.0], [1.0]), ModelSpace(2, 0.0))


def test_growth_samples_invariants():
    with pytest.raises(ValueError):
        GrowthSamples([1.0, 0.5], [1.0, 2.0])
    with pytest.raises(ValueError):
        GrowthSamples([0.5, 1.0], [2.0, 1.0])


def test_asymptotic_growth_ratio_examples():
    r = np.geomspace(1e-4, 1.0, 50)
    est = asymptotic_growth_ratio(GrowthSamples(r, math.pi * r**2), 2)
    assert est.value == pytest.approx(1.0, rel=1e-14) and est.reliable
    half = asymptotic_growth_ratio(GrowthSamples(r, 0.5 * math.pi * r**2), 2)
    assert half.value == pytest.approx(0.5 * est.value, rel=1e-14)
    s = trumpet_space(2, 0.5)
    tr = asymptotic_growth_ratio(GrowthSamples(r, s.volume_at(r)), 2)
    assert tr.value == pytest.approx(0.5, rel=1e-6)


def test_asymptotic_growth_ratio_flags_unsettled():
    r = np.geomspace(1e-4, 1.0, 50)
    est = asymptotic_growth_ratio(GrowthSamples(r, math.pi * r**2 * (1 + 10 * r)), 2, window=0.5)
    assert not est.reliable


def test_sn_matches_definition():
    assert sn(0.0, 2.0) == 2.0
    assert sn(-4.0, 1.0) == pytest.approx(math.sinh(2.0) / 2, rel=1e-15)
    assert sn(4.0, 0.5) == pytest.approx(math.sin(1.0) / 2, rel=1e-15)


@pytest.mark.parametrize("k", [-1.0, 1.0, -1e-6, 1e-300])
@pytest.mark.parametrize("r", [0.01, 0.5, 1.0])
def test_three_dimensional_volume_against_mpmath(k, r):
    a = mpmath.sqrt(abs(k))
    snk = (lambda x: mpmath.sinh(a * x) / a) if k < 0 else (lambda x: mpmath.sin(a * x) / a)
    oracle = float(mpmath.quad(lambda x: 4 * mpmath.pi * snk(x) ** 2, [0, r]))
    assert model_ball_volume(ModelSpace(3, k), r) == pytest.approx(oracle, rel=1e-13)
