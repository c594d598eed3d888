"""Explicit test functions: Moser's logarithmic probes and plateau bumps.

A Moser probe centered at the origin of a radial space is C t0 on B(r),
C t with t = n ln(R / rho) on the annulus r <= rho <= R, and 0 beyond R.
Its energy and Moser-Trudinger functional are integrated directly in rho
(the profile is known in closed form), in log space where needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from ._numerics import GL_NODES, GL_WEIGHTS, loglog_slope
from .errors import PreconditionError
from .functionals import MTParams, log_truncated_exp, mt_functional, mt_threshold
from .modelgeom import unit_sphere_area
from .radial import RadialSpace, cone_angle, profile_table
from .rearrange import RadialFunction, radial_energy

PANEL_RATIO = 1.05


@dataclass(frozen=True)
class MoserProbe:
    n: int
    theta: float
    eta: float
    R: float
    r: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if not self.theta > 0:
            raise ValueError("theta must be positive")
        if not 0 < self.eta < 1:
            raise ValueError("eta must lie in (0, 1)")
        if not 0 < self.r < self.R:
            raise ValueError("need 0 < r < R")

    @property
    def log_ratio(self) -> float:
        return math.log(self.R / self.r)

    @property
    def t0(self) -> float:
        return self.n * self.log_ratio

    @property
    def C(self) -> float:
        n = self.n
        return 1.0 / (n * (self.theta * (1 + self.eta) * unit_sphere_area(n) * self.log_ratio)
                      ** (1 / n))

    @property
    def peak(self) -> float:
        return self.C * self.t0

    def value(self, rho):
        rho = np.asarray(rho, dtype=float)
        t = self.n * np.log(self.R / np.clip(rho, self.r, self.R))
        return np.where(rho >= self.R, 0.0, self.C * t)


def _annulus_panels(space: RadialSpace, a: float, b: float, ratio: float = PANEL_RATIO):
    """Gauss-Legendre nodes/weights on [a, b], geometric panels merged with grid nodes."""
    count = max(1, int(math.ceil(math.log(b / a) / math.log(ratio))))
    g = space.grid
    cuts = np.unique(np.concatenate([np.geomspace(a, b, count + 1), g[(g > a) & (g < b)]]))
    lo, hi = cuts[:-1], cuts[1:]
    x = (lo[:, None] + (hi - lo)[:, None] * GL_NODES).ravel()
    w = ((hi - lo)[:, None] * GL_WEIGHTS).ravel()
    return x, w


def _check_support(p: MoserProbe, space: RadialSpace):
    if space.n != p.n:
        raise ValueError("probe and space dimensions differ")
    if p.R > space.r_max:
        raise ValueError(f"probe radius {p.R} beyond the tabulated radius {space.r_max}")


def moser_function(p: MoserProbe, space: RadialSpace, ratio: float = 1.01) -> RadialFunction:
    """Piecewise-linear sampling of the probe at geometric radii (exact at nodes)."""
    _check_support(p, space)
    count = max(2, int(math.ceil(math.log(p.R / p.r) / math.log(ratio))))
    rho = np.geomspace(p.r, p.R, count + 1)
    rho[-1] = p.R
    radii = np.concatenate([[0.0], rho])
    values = np.concatenate([[p.peak], p.value(rho[:-1]), [0.0]])
    values[1] = p.peak
    return RadialFunction(space, radii, values)


def moser_energy(p: MoserProbe, space: RadialSpace) -> float:
    """Exact-profile energy: integral over the annulus of (C n / rho)^n Per(S(rho))."""
    _check_support(p, space)
    x, w = _annulus_panels(space, p.r, p.R)
    return float(np.sum(w * (p.C * p.n / x) ** p.n * space.perimeter_at(x)))


@dataclass(frozen=True)
class PerimeterSlack:
    eta: float
    worst_radius: float
    holds: bool


def perimeter_slack(space: RadialSpace, theta: float, R: float, eta: float | None = None) -> PerimeterSlack:
    """Largest relative excess of Per(S(rho)) over theta s rho^(n-1) on (0, R]."""
    g = space.grid
    rho = g[(g > 0) & (g <= R)]
    if rho.size == 0 or rho[-1] < R:
        rho = np.append(rho, R)
    excess = space.perimeter_at(rho) / (theta * unit_sphere_area(space.n) * rho ** (space.n - 1)) - 1
    k = int(np.argmax(excess))
    worst = float(excess[k])
    return PerimeterSlack(worst, float(rho[k]), eta is None or worst <= eta + 1e-12)


def slack_radius(space: RadialSpace, theta: float, eta: float) -> float:
    """Largest grid radius R with Per(S(rho)) <= theta (1 + eta) s rho^(n-1) on (0, R]."""
    g = space.grid[1:]
    excess = space.perimeter_at(g) / (theta * unit_sphere_area(space.n) * g ** (space.n - 1)) - 1
    bad = np.nonzero(excess > eta)[0]
    if bad.size == 0:
        return float(g[-1])
    if bad[0] == 0:
        raise PreconditionError("perimeter comparison fails at the smallest radius")
    return float(g[bad[0] - 1])


@dataclass(frozen=True)
class MoserEnergyReport:
    energy: float
    bound: float
    holds: bool
    precondition_ok: bool
    worst_excess: float
    worst_radius: float


def moser_energy_bound_check(p: MoserProbe, space: RadialSpace, tol: float = 1e-10) -> MoserEnergyReport:
    """Energy of the probe against C^n n^(n-1) theta (1 + eta) s t0 (= 1 by the choice of C)."""
    slack = perimeter_slack(space, p.theta, p.R, p.eta)
    energy = moser_energy(p, space)
    n = p.n
    bound = p.C**n * n ** (n - 1) * p.theta * (1 + p.eta) * unit_sphere_area(n) * p.t0
    holds = slack.holds and energy <= 1 + tol
    return MoserEnergyReport(energy, bound, bool(holds), slack.holds, slack.eta, slack.worst_radius)


def moser_log_functional(p: MoserProbe, space: RadialSpace, alpha: float) -> float:
    """log of int F_n(alpha u^(n/(n-1))) for the exact probe profile."""
    _check_support(p, space)
    if alpha <= 0:
        return -math.inf
    n = p.n
    q = n / (n - 1)
    ball = math.log(float(space.volume_at(p.r))) + float(log_truncated_exp(n, alpha * p.peak**q))
    x, w = _annulus_panels(space, p.r, p.R)
    u = p.value(x)
    with np.errstate(divide="ignore"):
        terms = np.log(w) + np.log(space.perimeter_at(x)) + log_truncated_exp(n, alpha * u**q)
    return float(logsumexp(np.concatenate([[ball], terms])))


def moser_lower_bound(p: MoserProbe, alpha: float) -> float:
    """log of theta (1 - eta) s r^n / n * F_n(alpha (C t0)^(n/(n-1)))."""
    n = p.n
    q = n / (n - 1)
    return (math.log(p.theta * (1 - p.eta) * unit_sphere_area(n) / n) + n * math.log(p.r)
            + float(log_truncated_exp(n, alpha * p.peak**q)))


# -- scans --------------------------------------------------------------------------------

DIVERGENT, BOUNDED, INCONCLUSIVE = "divergent", "bounded", "inconclusive"


@dataclass(frozen=True)
class BlowupScan:
    rows: list
    verdicts: dict
    decade_growth: dict
    decade_change: dict
    radii: tuple
    settings: dict = field(default_factory=dict)


def _probe_settings(space: RadialSpace, theta, eta, R):
    theta = float(cone_angle(space).value) if theta is None else theta
    R = slack_radius(space, theta, eta) if R is None else R
    return theta, eta, R


def _decade_pair(radii):
    r = np.sort(np.asarray(radii, dtype=float))
    if r.size < 2 or r[-1] < 10 * r[0] * (1 - 1e-9):
        raise ValueError("radii must span at least one decade")
    k = int(np.argmin(np.abs(np.log10(r / (10 * r[0])))))
    return float(r[0]), float(r[k])


def decade_statistics(log_small: float, log_large: float, span_decades: float):
    """(growth factor per decade, relative change) between two log-values."""
    if log_small == -math.inf and log_large == -math.inf:
        return 1.0, 0.0
    growth = math.exp((log_small - log_large) / span_decades) if log_large > -math.inf else math.inf
    change = abs(math.expm1(log_large - log_small)) if log_small > -math.inf else math.inf
    return growth, change


def blowup_scan(space: RadialSpace, alphas, radii, theta: float | None = None,
                eta: float = 0.01, R: float | None = None, method: str = "exact") -> BlowupScan:
    """Functional of Moser probes for each alpha over shrinking inner radii r.

    Per alpha the verdict compares the smallest r with the one a decade
    above it: "divergent" for at least 10x growth per decade, "bounded" for
    under 1% relative change, "inconclusive" otherwise.
    """
    alphas = [float(a) for a in alphas]
    radii = sorted((float(r) for r in radii), reverse=True)
    if not alphas or not radii:
        raise ValueError("alpha and radius grids must be nonempty")
    theta, eta, R = _probe_settings(space, theta, eta, R)
    if radii[0] >= R:
        raise ValueError(f"inner radii must lie below the probe radius R={R:.6g}")
    r_small, r_large = _decade_pair(radii)
    span = math.log10(r_large / r_small)
    rows, verdicts, growth, change = [], {}, {}, {}
    n = space.n
    for a in alphas:
        logs = {}
        for r in radii:
            probe = MoserProbe(n, theta, eta, R, r)
            if a <= 0:
                lv = -math.inf
            elif method == "exact":
                lv = moser_log_functional(probe, space, a)
            else:
                lv = mt_functional(moser_function(probe, space), MTParams(n, a)).log_value
            logs[r] = lv
            rows.append((a, r, math.exp(lv) if lv < 690 else math.inf, lv))
        g, ch = decade_statistics(logs[r_small], logs[r_large], span)
        growth[a], change[a] = g, ch
        if g >= 10.0:
            verdicts[a] = DIVERGENT
        elif ch < 0.01:
            verdicts[a] = BOUNDED
        else:
            verdicts[a] = INCONCLUSIVE
    return BlowupScan(rows, verdicts, growth, change, tuple(radii),
                      {"theta": theta, "eta": eta, "R": R, "n": n})


def probe_trend(space: RadialSpace, alpha: float, radii, theta: float, eta: float, R: float) -> float:
    """Least-squares slope of log I(r) against log(1/r) over the scanned radii."""
    r = np.asarray(radii, dtype=float)
    logs = np.array([moser_log_functional(MoserProbe(space.n, theta, eta, R, x), space, alpha)
                     for x in r])
    return float(np.polyfit(np.log(1 / r), logs, 1)[0])


@dataclass(frozen=True)
class ThresholdEstimate:
    estimate: float
    bracket: tuple
    reference: float
    relative_error: float
    iterations: int
    flagged: bool


def threshold_estimate(space: RadialSpace, n: int | None = None, radii=None, eta: float = 0.01, rel_tol: float = 0.01,
                       max_iter: int = 40, tail_slope_min: float = 0.9) -> ThresholdEstimate:
    """Bisect on alpha for the sign change of the probe functional's trend.

    Above the threshold the probe functional grows along r -> 0, below it
    decays. Spaces whose profile grows sublinearly at large volume (no
    positive Cheeger slope, e.g. Euclidean space) are refused.
    """
    if n is not None and n != space.n:
        raise ValueError(f"dimension {n} does not match the space ({space.n})")
    n = space.n
    table = profile_table(space, count=200)
    t, P = table.volumes, table.perimeters
    k = max(3, t.size // 10)
    tail = loglog_slope(t[-k:], P[-k:])
    if not tail >= tail_slope_min:
        raise PreconditionError(
            f"profile tail grows like t^{tail:.3f}; a linear lower bound is required")
    theta = float(cone_angle(space).value)
    R = slack_radius(space, theta, eta)
    if radii is None:
        radii = np.geomspace(R * 1e-3, R * 1e-2, 5)
    radii = np.asarray(radii, dtype=float)
    if np.any(radii >= R):
        raise ValueError("inner radii must lie below the probe radius")

    def grows(a):
        return probe_trend(space, a, radii, theta, eta, R) > 0

    lo, hi = 1.0, 2.0
    it = 0
    while grows(lo) and it < max_iter:
        lo, hi, it = lo / 2, lo, it + 1
    while not grows(hi) and it < max_iter:
        lo, hi, it = hi, hi * 2, it + 1
    flagged = it >= max_iter
    while (hi - lo) > rel_tol * hi and it < max_iter:
        mid = 0.5 * (lo + hi)
        if grows(mid):
            hi = mid
        else:
            lo = mid
        it += 1
    est = 0.5 * (lo + hi)
    ref = mt_threshold(n, min(theta, 1.0))
    return ThresholdEstimate(est, (lo, hi), ref, abs(est - ref) / ref, it,
                             bool(flagged or (hi - lo) > rel_tol * hi))


# -- plateau bumps ----------------------------------------------------------------------------

@dataclass(frozen=True)
class BumpProbe:
    r_m: float
    C: float
    n: int = 2

    def __post_init__(self):
        if not self.r_m > 0:
            raise ValueError("r_m must be positive")
        if not self.C > 1:
            raise ValueError("doubling constant must exceed 1")

    @property
    def T(self) -> float:
        return (1.0 / ((self.C - 1) * self.r_m)) ** (1 / self.n)


def bump_function(p: BumpProbe, space: RadialSpace) -> RadialFunction:
    """T on B(1), linear down to 0 at radius 2."""
    if space.r_max < 2:
        raise ValueError("space must reach radius 2")
    return RadialFunction(space, np.array([0.0, 1.0, 2.0]), np.array([p.T, p.T, 0.0]))


@dataclass(frozen=True)
class BumpRow:
    r_m: float
    T: float
    energy: float
    log_functional: float
    log_lower_bound: float


@dataclass(frozen=True)
class BumpTable:
    rows: list
    increasing: bool
    energies_ok: bool


def bump_sequence_check(spaces, C: float, alpha: float, tol: float = 1e-8) -> BumpTable:
    """Plateau bumps on a family whose unit balls shrink in volume.

    For each space r_m = mu(B(1)); the doubling hypothesis mu(B(2)) <= C r_m
    is checked, T_m = (1/((C-1) r_m))^(1/n) and the energy must be <= 1.
    """
    rows = []
    for s in spaces:
        r_m = float(s.volume_at(1.0))
        v2 = float(s.volume_at(2.0))
        if v2 > C * r_m * (1 + 1e-12):
            raise PreconditionError(f"doubling fails: mu(B(2)) = {v2:.6g} > C mu(B(1)) = {C * r_m:.6g}")
        p = BumpProbe(r_m, C, s.n)
        u = bump_function(p, s)
        energy = radial_energy(u, s.n)
        rep = mt_functional(u, MTParams(s.n, alpha))
        q = s.n / (s.n - 1)
        lower = math.log(r_m) + float(log_truncated_exp(s.n, alpha * p.T**q))
        rows.append(BumpRow(r_m, p.T, energy, rep.log_value, lower))
    rows.sort(key=lambda row: -row.r_m)
    logs = [row.log_functional for row in rows]
    increasing = all(b > a for a, b in zip(logs, logs[1:]))
    ok = all(row.energy <= 1 + tol for row in rows)
    return BumpTable(rows, bool(increasing), bool(ok))
