"""Constant-curvature model geometry and Bishop-Gromov style checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import gamma

from ._numerics import Estimate, window_size


def unit_ball_volume(n: int) -> float:
    """Volume of the unit ball in R^n, pi^(n/2) / Gamma(n/2 + 1)."""
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    return float(math.pi ** (n / 2) / gamma(n / 2 + 1))


def unit_sphere_area(n: int) -> float:
    """Area of the unit sphere S^(n-1) bounding the unit ball of R^n (= n * omega_n)."""
    return n * unit_ball_volume(n)


@dataclass(frozen=True)
class ModelSpace:
    """Simply connected space of constant sectional curvature ``k``."""

    n: int
    k: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"model dimension must be >= 2, got {self.n}")

    @property
    def T(self) -> float:
        # first zero of sn_k; spheres degenerate there
        if self.k <= 0:
            return math.inf
        return math.pi / math.sqrt(self.k)


def sn(k: float, r):
    """Generalized sine: r, sinh(r sqrt(-k))/sqrt(-k) or sin(r sqrt(k))/sqrt(k)."""
    r = np.asarray(r, dtype=float)
    if k == 0:
        return r
    if k < 0:
        a = math.sqrt(-k)
        return np.sinh(a * r) / a
    a = math.sqrt(k)
    return np.sin(a * r) / a


def _check_radius(m: ModelSpace, r, inclusive: bool):
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("radius must be positive")
    bad = r > m.T if inclusive else r >= m.T
    if np.any(bad):
        raise ValueError(f"radius beyond the model horizon T={m.T}")
    return r


def model_sphere_area(m: ModelSpace, r):
    """Area s(n, k, r) of the geodesic sphere of radius r."""
    r = _check_radius(m, r, inclusive=False)
    out = unit_sphere_area(m.n) * sn(m.k, r) ** (m.n - 1)
    return float(out) if out.ndim == 0 else out


def _ball3(k: float, r):
    """pi (sinh(2x) - 2x) / a^3 with x = a r, a = sqrt(-k) (sin for k > 0), cancellation-free."""
    r = np.asarray(r, dtype=float)
    a = math.sqrt(abs(k))
    y = 2 * a * r
    sign = 1.0 if k < 0 else -1.0
    # series in k directly so tiny curvatures never divide by a^3
    series = sum(sign**j * (2 * r) ** (2 * j + 3) * abs(k) ** j / math.factorial(2 * j + 3)
                 for j in range(7))
    with np.errstate(all="ignore"):
        direct = ((np.sinh(y) - y) if k < 0 else (y - np.sin(y))) / a**3
    return math.pi * np.where(y < 0.1, series, direct)


def _closed_form_volume(m: ModelSpace, r):
    n, k = m.n, m.k
    if k == 0:
        return unit_ball_volume(n) * r**n
    a = math.sqrt(abs(k))
    if n == 2:
        # cosh x - 1 = 2 sinh^2(x/2), 1 - cos x = 2 sin^2(x/2)
        half = np.sinh(a * r / 2) if k < 0 else np.sin(a * r / 2)
        return 4 * math.pi * (half / a) ** 2
    if n == 3:
        return _ball3(k, r)
    return None


def model_ball_volume(m: ModelSpace, r):
    """Volume v(n, k, r) of the geodesic ball of radius r.

    Closed forms cover k = 0 and n in {2, 3}; other cases integrate the
    sphere area adaptively to absolute tolerance 1e-10.
    """
    r = _check_radius(m, r, inclusive=True)
    out = _closed_form_volume(m, r)
    if out is None:
        s = unit_sphere_area(m.n)
        f = lambda rho: s * float(sn(m.k, rho)) ** (m.n - 1)  # noqa: E731
        flat = np.array([integrate.quad(f, 0.0, float(x), epsabs=1e-10, epsrel=1e-12, limit=200)[0]
                         for x in np.atleast_1d(r)])
        out = flat.reshape(r.shape)
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class GrowthSamples:
    """Ball volumes (and optionally sphere perimeters) sampled at increasing radii."""

    radii: np.ndarray
    ball_volumes: np.ndarray
    perimeters: np.ndarray | None = None

    def __post_init__(self):
        radii = np.asarray(self.radii, dtype=float)
        vols = np.asarray(self.ball_volumes, dtype=float)
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "ball_volumes", vols)
        if radii.shape != vols.shape or radii.ndim != 1:
            raise ValueError("radii and ball_volumes must be 1-d arrays of equal length")
        if np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
            raise ValueError("radii must be positive and strictly increasing")
        if np.any(vols <= 0) or np.any(np.diff(vols) < 0):
            raise ValueError("ball volumes must be positive and nondecreasing")
        if self.perimeters is not None:
            per = np.asarray(self.perimeters, dtype=float)
            if per.shape != radii.shape or np.any(per < 0):
                raise ValueError("perimeters must be nonnegative, one per radius")
            object.__setattr__(self, "perimeters", per)


@dataclass(frozen=True)
class BishopGromovReport:
    monotone_volume_ratio: bool
    perimeter_ratio_monotone: bool
    perimeter_leq_volume_ratio: bool
    worst_violation: float


def bishop_gromov_check(g: GrowthSamples, m: ModelSpace, rtol: float = 1e-9) -> BishopGromovReport:
    """Check the three Bishop-Gromov comparisons sample by sample.

    The worst violation is the largest signed excess over all comparisons
    (zero or negative when everything holds).
    """
    if g.radii.size < 2:
        raise ValueError("need at least two samples")
    if g.radii[-1] >= m.T:
        raise ValueError("samples must lie inside the model horizon")
    vr = g.ball_volumes / model_ball_volume(m, g.radii)
    excess = [np.max(np.diff(vr))]
    mono_v = bool(excess[0] <= rtol * np.max(vr))
    mono_p = leq = True
    if g.perimeters is not None:
        pr = g.perimeters / model_sphere_area(m, g.radii)
        # Per(B_R)/s(R) <= Per(B_r)/s(r) for all r <= R; adjacent pairs suffice
        dp = np.max(np.diff(pr))
        gap = np.max(pr - vr)
        mono_p = bool(dp <= rtol * np.max(pr))
        leq = bool(gap <= rtol * np.max(vr))
        excess += [dp, gap]
    return BishopGromovReport(mono_v, mono_p, leq, float(max(excess)))


def asymptotic_growth_ratio(g: GrowthSamples, n: int, window: float = 0.1,
                            settle_tol: float = 1e-2) -> Estimate:
    """Estimate liminf_{r->0} Vol(B_r) / (omega_n r^n) from sampled balls.

    The estimate is the minimum ratio over the smallest ``window`` fraction of
    radii; it is flagged unreliable when that window holds fewer than two
    samples or the ratios there spread by more than ``settle_tol``.
    """
    if g.radii.size < 3:
        raise ValueError("need at least three samples")
    ratio = g.ball_volumes / (unit_ball_volume(n) * g.radii**n)
    k = window_size(g.radii.size, window, minimum=2)
    w = ratio[:k]
    value = float(np.min(w))
    spread = float(np.ptp(w) / value) if value > 0 else math.inf
    reliable = k >= 2 and spread <= settle_tol
    return Estimate(value, float(g.radii[k - 1]), reliable, spread)
