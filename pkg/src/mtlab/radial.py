"""Radial warped spaces dr^2 + g(r)^2 dtheta^2, their profiles, and synthesis.

A :class:`RadialSpace` stores the warp on a grid. Between nodes ``log g`` is
interpolated monotonically (PCHIP) against ``log r``, which is exact for cone
warps g = c r and very accurate for sinh-type warps on the default grids.
Volumes are accumulated with Gauss-Legendre panels on that interpolant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator

from ._numerics import GL_NODES, GL_WEIGHTS, Estimate, loglog_slope, window_size
from .modelgeom import unit_ball_volume, unit_sphere_area

GEOMETRIC_RATIO = 1.05
STABLE_SLOPE = 0.05


def make_grid(r_max: float, M: int, r_min: float | None = None,
              ratio: float = GEOMETRIC_RATIO) -> np.ndarray:
    """Radii 0 = r_0 < r_1 < ... ending at ``r_max``.

    Geometric with the given ratio from ``r_min`` until the step reaches
    ``r_max / M``, uniform afterwards.
    """
    if r_max <= 0:
        raise ValueError("r_max must be positive")
    if M < 16:
        raise ValueError("M must be at least 16")
    h = r_max / M
    if r_min is None:
        r_min = 1e-8 * r_max
    r_switch = h / (ratio - 1.0)
    geo = []
    r = r_min
    while r < min(r_switch, r_max):
        geo.append(r)
        r *= ratio
    start = geo[-1] if geo else 0.0
    count = max(1, int(math.ceil((r_max - start) / h)))
    uni = np.linspace(start, r_max, count + 1)[1:]
    return np.concatenate([[0.0], geo, uni])


@dataclass(frozen=True, eq=False)
class RadialSpace:
    """Radial metric dr^2 + g(r)^2 dtheta^2 on R^n with a tabulated warp."""

    n: int
    grid: np.ndarray
    warp: np.ndarray
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        warp = np.asarray(self.warp, dtype=float)
        if self.n < 2:
            raise ValueError("dimension must be >= 2")
        if grid.ndim != 1 or grid.shape != warp.shape or grid.size < 3:
            raise ValueError("grid and warp must be 1-d arrays of equal length >= 3")
        if grid[0] != 0.0 or np.any(np.diff(grid) <= 0):
            raise ValueError("grid must start at 0 and be strictly increasing")
        if not np.all(np.isfinite(warp)) or np.any(warp[1:] <= 0):
            raise ValueError("warp must be finite and positive away from the origin")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "warp", warp)
        lr, lg = np.log(grid[1:]), np.log(warp[1:])
        spline = PchipInterpolator(lr, lg, extrapolate=True)
        # power law g ~ r^a on [0, r_1]
        a = float((lg[1] - lg[0]) / (lr[1] - lr[0]))
        object.__setattr__(self, "_logwarp", spline)
        object.__setattr__(self, "_origin_exponent", a)
        object.__setattr__(self, "_sphere", unit_sphere_area(self.n))
        object.__setattr__(self, "_node_volumes", self._accumulate_volumes())

    # -- pointwise geometry -------------------------------------------------
    @property
    def r_max(self) -> float:
        return float(self.grid[-1])

    @property
    def capacity(self) -> float:
        """Volume of the tabulated ball B(0, r_max)."""
        return float(self._node_volumes[-1])

    @property
    def node_volumes(self) -> np.ndarray:
        return self._node_volumes

    def warp_at(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        r1, g1 = self.grid[1], self.warp[1]
        inner = (r > 0) & (r < r1)
        outer = r >= r1
        out[inner] = g1 * (r[inner] / r1) ** self._origin_exponent
        out[outer] = np.exp(self._logwarp(np.log(r[outer])))
        return out

    def perimeter_at(self, r):
        """Area of the centered sphere of radius r."""
        return self._sphere * self.warp_at(r) ** (self.n - 1)

    def _accumulate_volumes(self) -> np.ndarray:
        g = self.grid
        a, b = g[1:-1], g[2:]
        x = a[:, None] + (b - a)[:, None] * GL_NODES
        panel = (self.perimeter_at(x) * GL_WEIGHTS).sum(axis=1) * (b - a)
        first = self.perimeter_at(g[1]) * g[1] / (self._origin_exponent * (self.n - 1) + 1)
        return np.concatenate([[0.0, float(first)], float(first) + np.cumsum(panel)])

    def volume_at(self, r):
        """Volume of the centered ball of radius r (r <= r_max)."""
        r = np.asarray(r, dtype=float)
        if np.any(r < 0) or np.any(r > self.r_max * (1 + 1e-12)):
            raise ValueError("radius outside the tabulated range")
        flat = np.atleast_1d(r).ravel()
        idx = np.clip(np.searchsorted(self.grid, flat, side="right") - 1, 0, self.grid.size - 2)
        out = np.empty_like(flat)
        inner = idx == 0
        if np.any(inner):
            ri = flat[inner]
            out[inner] = self.perimeter_at(ri) * ri / (self._origin_exponent * (self.n - 1) + 1)
        outer = ~inner
        if np.any(outer):
            lo = self.grid[idx[outer]]
            hi = flat[outer]
            x = lo[:, None] + (hi - lo)[:, None] * GL_NODES
            out[outer] = self._node_volumes[idx[outer]] + (
                (self.perimeter_at(x) * GL_WEIGHTS).sum(axis=1) * (hi - lo))
        out = out.reshape(np.shape(r))
        return float(out) if out.ndim == 0 else out

    def radius_of_volume(self, t):
        """Unique radius T with V(T) = t, by safeguarded Newton iteration."""
        t = np.asarray(t, dtype=float)
        flat = np.atleast_1d(t).ravel()
        cap = self.capacity
        if np.any(flat < 0) or np.any(flat > cap * (1 + 1e-12)):
            raise ValueError(f"volume outside tabulated range [0, {cap}]")
        flat = np.minimum(flat, cap)
        vols = self._node_volumes
        idx = np.clip(np.searchsorted(vols, flat, side="right") - 1, 0, vols.size - 2)
        lo, hi = self.grid[idx].copy(), self.grid[idx + 1].copy()
        vlo, vhi = vols[idx], vols[idx + 1]
        frac = np.where(vhi > vlo, (flat - vlo) / np.where(vhi > vlo, vhi - vlo, 1.0), 0.0)
        r = lo + frac * (hi - lo)
        active = np.flatnonzero(flat > 0)
        for _ in range(60):
            if active.size == 0:
                break
            ra, ta = r[active], flat[active]
            resid = self.volume_at(ra) - ta
            la = np.where(resid < 0, ra, lo[active])
            ha = np.where(resid > 0, ra, hi[active])
            slope = self.perimeter_at(ra)
            with np.errstate(divide="ignore", invalid="ignore"):
                cand = ra - np.where(slope > 0, resid / slope, 0.0)
            bad = ~((cand > la) & (cand < ha)) | (slope <= 0)
            cand = np.where(bad, 0.5 * (la + ha), cand)
            # stop on a tiny residual or once the bracket is at rounding level
            done = (np.abs(resid) <= 1e-14 * ta) | (ha - la <= 4e-16 * ha)
            r[active] = np.where(done, ra, cand)
            lo[active], hi[active] = la, ha
            active = active[~done]
        r = np.where(flat == 0, 0.0, r)
        out = r.reshape(np.shape(t))
        return float(out) if out.ndim == 0 else out


def radial_space(n: int, grid, warp, label: str = "", **meta) -> RadialSpace:
    return RadialSpace(n, np.asarray(grid, float), np.asarray(warp, float), label, dict(meta))


@dataclass(frozen=True)
class Trumpet:
    """Hyperbolic trumpet of cone angle ``beta``: warp beta^(1/(n-1)) sinh(r)."""

    n: int
    beta: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("dimension must be >= 2")
        if not (0 < self.beta <= 1):
            raise ValueError(f"cone angle must lie in (0, 1], got {self.beta}")

    def space(self, r_max: float = 5.0, M: int = 2000) -> RadialSpace:
        return trumpet_space(self.n, self.beta, r_max, M)


def trumpet_space(n: int, beta: float, r_max: float = 5.0, M: int = 2000) -> RadialSpace:
    """Tabulated hyperbolic trumpet; beta = 1 is hyperbolic space H^n."""
    Trumpet(n, beta)
    grid = make_grid(r_max, M)
    warp = beta ** (1.0 / (n - 1)) * np.sinh(grid)
    return radial_space(n, grid, warp, f"trumpet(n={n}, beta={beta})", kind="trumpet", beta=beta)


def euclidean_space(n: int, r_max: float = 5.0, M: int = 2000) -> RadialSpace:
    grid = make_grid(r_max, M)
    return radial_space(n, grid, grid.copy(), f"euclidean(n={n})", kind="euclidean", beta=1.0)


def cone_space(n: int, angle: float, r_max: float = 5.0, M: int = 2000) -> RadialSpace:
    """Flat cone whose small balls have volume ``angle * omega_n r^n``."""
    grid = make_grid(r_max, M)
    warp = angle ** (1.0 / (n - 1)) * grid
    return radial_space(n, grid, warp, f"cone(n={n}, angle={angle})", kind="cone", beta=angle)


def radial_profile(s: RadialSpace, t):
    """Perimeter of the centered ball of volume t."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0) or np.any(t > s.capacity * (1 + 1e-12)):
        raise ValueError(f"volume outside (0, {s.capacity}]")
    out = s.perimeter_at(s.radius_of_volume(t))
    return float(out) if np.ndim(out) == 0 else out


# -- isoperimetric profile tables ---------------------------------------------

@dataclass(frozen=True, eq=False)
class ProfileTable:
    """Tabulated profile t -> Phi(t) for volumes 0 < t_0 < t_1 < ..."""

    volumes: np.ndarray
    perimeters: np.ndarray
    total_volume: float = math.inf

    def __post_init__(self):
        v = np.asarray(self.volumes, dtype=float)
        p = np.asarray(self.perimeters, dtype=float)
        if v.ndim != 1 or v.shape != p.shape or v.size == 0:
            raise ValueError("volumes and perimeters must be 1-d arrays of equal length")
        if np.any(v < 0) or np.any(np.diff(v) <= 0):
            raise ValueError("volumes must be nonnegative and strictly increasing")
        if np.any(p[v > 0] <= 0) or np.any(p < 0):
            raise ValueError("profile must be positive at positive volume")
        if not (self.total_volume > 0):
            raise ValueError("total volume must be positive")
        if v[-1] > self.total_volume:
            raise ValueError("tabulated volume exceeds total volume")
        object.__setattr__(self, "volumes", v)
        object.__setattr__(self, "perimeters", p)

    def positive(self):
        keep = self.volumes > 0
        return self.volumes[keep], self.perimeters[keep]


def profile_table(s: RadialSpace, count: int = 400, t_min: float | None = None,
                  t_max: float | None = None) -> ProfileTable:
    """Tabulate the radial profile of ``s`` at log-spaced volumes."""
    cap = s.capacity
    t_max = cap if t_max is None else min(t_max, cap)
    if t_min is None:
        t_min = float(s.node_volumes[2])
    t = np.geomspace(t_min, t_max, count)
    return ProfileTable(t, radial_profile(s, t), math.inf)


def power_profile(n: int, coefficient: float, volumes) -> ProfileTable:
    """Table of f(t) = coefficient * t^(1 - 1/n) (a Euclidean-type profile)."""
    v = np.asarray(volumes, dtype=float)
    return ProfileTable(v, coefficient * v ** (1 - 1 / n), math.inf)


def euclidean_profile(n: int, volumes) -> ProfileTable:
    return power_profile(n, n * unit_ball_volume(n) ** (1 / n), volumes)


# -- synthesis ------------------------------------------------------------------

def _profile_interpolant(f: ProfileTable, n: int, window: float, settle_tol: float):
    t, phi = f.positive()
    if t.size < 3:
        raise ValueError("profile needs at least three positive samples")
    if np.any(phi <= 0):
        raise ValueError("profile vanishes at a positive volume (singular profile)")
    expo = 1 - 1 / n
    ratio = phi / t**expo
    k = window_size(t.size, window)
    spread = np.ptp(ratio[:k]) / ratio[0]
    if spread > settle_tol:
        raise ValueError(f"profile ratio f(t)/t^(1-1/n) not settled near 0 (spread {spread:.3g})")
    alpha = float(ratio[0])
    spline = PchipInterpolator(np.log(t), np.log(phi), extrapolate=False)
    t0, t_hi = float(t[0]), float(t[-1])

    def fval(v):
        v = np.asarray(v, dtype=float)
        out = np.empty_like(v)
        small = v < t0
        out[small] = alpha * np.maximum(v[small], 0.0) ** expo
        big = ~small
        out[big] = np.exp(spline(np.log(np.minimum(v[big], t_hi))))
        return out

    return fval, alpha, t_hi


def synthesize_from_profile(f: ProfileTable, n: int, M: int = 2000, window: float = 0.1,
                            settle_tol: float = 5e-2, seed_level: float = 1e-8,
                            rtol: float = 1e-12) -> RadialSpace:
    """Radial space whose radial profile is the tabulated ``f``.

    Integrates F' = f(s F^n) / (n s F^(n-1)), F^n = V / s (s the unit sphere
    area), from the series start F ~ F'(0) r until the volume reaches the
    largest tabulated value. The warp is g = (f(V)/s)^(1/(n-1)).
    """
    fval, alpha, t_hi = _profile_interpolant(f, n, window, settle_tol)
    s = unit_sphere_area(n)
    slope0 = alpha / (n * s ** (1 / n))
    r0 = seed_level / slope0

    def rhs(_r, y):
        F = y[0]
        return [fval(np.array([s * F**n]))[0] / (n * s * F ** (n - 1))]

    def reach(_r, y):
        return s * y[0] ** n - t_hi

    reach.terminal = True
    reach.direction = 1
    # F grows at least linearly; the bound is generous
    r_cap = r0 + 10.0 * (t_hi / s) ** (1 / n) / max(slope0, 1e-300) + 1e3
    sol = solve_ivp(rhs, (r0, r_cap), [seed_level], method="DOP853", rtol=rtol,
                    atol=seed_level * 1e-6, dense_output=True, events=reach)
    if sol.status != 1:
        raise ValueError("profile synthesis did not reach the tabulated volume range")
    r_end = float(sol.t_events[0][0])
    grid = make_grid(r_end - r0, M, r_min=r0)
    grid = np.concatenate([[0.0], grid[1:] + 0.0])
    grid = grid[grid <= r_end]
    if grid[-1] < r_end:
        grid = np.append(grid, r_end)
    F = np.empty_like(grid)
    F[0] = 0.0
    seg = grid[1:]
    early = seg <= r0
    F[1:][early] = slope0 * seg[early]
    F[1:][~early] = sol.sol(seg[~early])[0]
    vol = np.minimum(s * F**n, t_hi)
    warp = np.zeros_like(grid)
    warp[1:] = (fval(vol[1:]) / s) ** (1 / (n - 1))
    cone = alpha**n / (n ** (n - 1) * s)
    return radial_space(n, grid, warp, f"synthesized(n={n})", kind="synthesized",
                        cone_angle=cone, alpha=alpha)


def cone_angle(s: RadialSpace, window: float = 0.1, settle_tol: float = 1e-3) -> Estimate:
    """Small-ball density lim (g(r)/r)^(n-1) read off the innermost nodes."""
    r, g = s.grid[1:], s.warp[1:]
    ratio = (g / r) ** (s.n - 1)
    k = window_size(r.size, window)
    spread = float(np.ptp(ratio[:k]) / ratio[0])
    return Estimate(float(ratio[0]), float(r[k - 1]), spread <= settle_tol, spread)


# -- domination and invariants ---------------------------------------------------

@dataclass(frozen=True)
class DominationReport:
    dominated: bool
    worst_gap: float
    half_volume_used: float
    capacity_ok: bool


def check_domination(phi: ProfileTable, s: RadialSpace, rtol: float = 1e-9) -> DominationReport:
    """Check Phi(t) >= phi_sigma(t) for tabulated t up to half the total volume.

    For infinite total volume every tabulated volume is compared and the
    radial space must cover the largest of them.
    """
    t, P = phi.positive()
    half = phi.total_volume / 2
    keep = t <= half * (1 + 1e-12)
    t, P = t[keep], P[keep]
    if t.size == 0:
        raise ValueError("no tabulated volume below half the total volume")
    needed = half if math.isfinite(half) else float(t[-1])
    inside = t <= s.capacity * (1 + 1e-12)
    if not np.any(inside):
        raise ValueError("profile and radial space volume ranges are disjoint")
    model = radial_profile(s, np.minimum(t[inside], s.capacity))
    gap = P[inside] - model
    worst = float(np.min(gap))
    ok_gap = bool(np.all(gap >= -rtol * np.maximum(model, 1.0)))
    cap_ok = s.capacity >= needed * (1 - 1e-12)
    return DominationReport(ok_gap and cap_ok, worst, float(half), bool(cap_ok))


@dataclass(frozen=True)
class IsoInvariants:
    iso_dimension: float
    ratios: dict
    cheeger_slope: float
    dimension_fit: float
    window: float


def iso_ratio(phi: ProfileTable, m: int, window: float = 0.1) -> Estimate:
    """Windowed estimate of liminf Phi(t)^m / (m^m omega_m t^(m-1))."""
    t, P = phi.positive()
    k = window_size(t.size, window)
    ratio = P[:k] ** m / (m**m * unit_ball_volume(m) * t[:k] ** (m - 1))
    slope = loglog_slope(t[:k], ratio)
    value = float(np.min(ratio))
    return Estimate(value, float(t[k - 1]), bool(abs(slope) <= STABLE_SLOPE), slope)


def iso_invariants(phi: ProfileTable, m_range=(1, 2, 3, 4), window: float = 0.1) -> IsoInvariants:
    """Asymptotic isoperimetric ratios, isoperimetric dimension and Cheeger slope.

    The ratio for each m is a windowed minimum; its ``spread`` field holds
    the log-log slope across the window, which is ~0 only at the right
    dimension. The dimension estimate is the smallest m with a settled,
    positive ratio (nan if none).
    """
    ratios = {m: iso_ratio(phi, m, window) for m in m_range}
    dim = next((float(m) for m in sorted(ratios) if ratios[m].reliable and ratios[m].value > 0),
               math.nan)
    t, P = phi.positive()
    k = window_size(t.size, window)
    slope = loglog_slope(t[:k], P[:k])
    fit = 1.0 / (1.0 - slope) if slope < 1 else math.inf
    keep = t <= phi.total_volume / 2 * (1 + 1e-12)
    h = float(np.min(P[keep] / t[keep])) if np.any(keep) else math.nan
    return IsoInvariants(dim, ratios, h, fit, float(t[k - 1]))


def dominating_trumpet(h: float, l_inf: float, m: int, delta: float = 1e-3,
                       t_max: float | None = None, count: int = 400):
    """Trumpet parameters plus a profile below both asymptotic regimes.

    The profile is (1 - delta) * max(m (l_inf omega_m)^(1/m) t^(1-1/m), h t):
    the small-volume power law up to the crossover t* = (A/h)^m, linear
    past it. A profile obeying both lower bounds stays above it. Returns ``(Trumpet(m, l_inf), ProfileTable)``.
    """
    if h <= 0 or l_inf <= 0:
        raise ValueError("Cheeger slope and asymptotic ratio must be positive")
    trumpet = Trumpet(m, l_inf)
    A = m * (l_inf * unit_ball_volume(m)) ** (1 / m)
    t_star = (A / h) ** m
    if t_max is None:
        t_max = 1e4 * t_star
    t = np.unique(np.concatenate([np.geomspace(t_star * 1e-10, t_max, count), [t_star]]))
    f = (1 - delta) * np.maximum(A * t ** (1 - 1 / m), h * t)
    return trumpet, ProfileTable(t, f, math.inf)


@dataclass(frozen=True)
class SmallVolumeBound:
    C: float
    eta: float
    holds: bool
    slope: float


def small_volume_bound_check(phi: ProfileTable, n: int, window: float = 0.1) -> SmallVolumeBound:
    """Largest C with Phi(t) >= C t^((n-1)/n) on the smallest-volume window.

    ``holds`` also requires the ratio to have settled (flat in log-log);
    a profile with the wrong small-volume exponent yields a C that keeps
    shrinking with the window and is flagged.
    """
    t, P = phi.positive()
    k = window_size(t.size, window)
    ratio = P[:k] / t[:k] ** ((n - 1) / n)
    C = float(np.min(ratio))
    slope = loglog_slope(t[:k], ratio)
    return SmallVolumeBound(C, float(t[k - 1]), bool(C > 0 and abs(slope) <= STABLE_SLOPE), slope)


@dataclass(frozen=True)
class BallVolumeBound:
    bound: float
    displayed: float
    flagged: bool
    C: float
    eta: float


def ball_volume_lower_bound(phi: ProfileTable, n: int, r: float,
                            window: float = 0.1) -> BallVolumeBound:
    """Certified lower bound on the measure of any r-ball.

    Integrating d/dr mu(B) >= C mu(B)^(1-1/n) gives mu(B_r) >= (C r / n)^n
    while mu(B_r) < eta; the (n C r)^n form is reported as ``displayed``.
    """
    sv = small_volume_bound_check(phi, n, window)
    if not sv.holds:
        return BallVolumeBound(0.0, 0.0, True, sv.C, sv.eta)
    integrated = (sv.C * r / n) ** n
    return BallVolumeBound(min(sv.eta, integrated), (n * sv.C * r) ** n, False, sv.C, sv.eta)
