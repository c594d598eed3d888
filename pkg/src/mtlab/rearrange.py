"""Distribution functions, decreasing rearrangement and Polya-Szego checks.

Radial functions are piecewise linear in r between nodes; a repeated radius
encodes a jump. For such functions the distribution A(t) = mu({u > t}),
its speed -A'(t) and the level-set perimeter are exact closed forms in the
roots of u = t, so every energy below is a Gauss-Legendre quadrature in the
level variable over intervals where those formulas are smooth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._numerics import GL_NODES, GL_WEIGHTS
from .discrete import DiscreteFunction, DiscreteMMS, cheeger_energy, iso_profile_bruteforce
from .errors import PreconditionError
from .radial import ProfileTable, RadialSpace, check_domination, radial_profile


@dataclass(frozen=True, eq=False)
class RadialFunction:
    """u(r) piecewise linear through (radii[i], values[i]), zero past the last node."""

    space: RadialSpace
    radii: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if r.ndim != 1 or r.shape != v.shape or r.size < 2:
            raise ValueError("radii and values must be 1-d arrays of equal length >= 2")
        if r[0] != 0 or np.any(np.diff(r) < 0):
            raise ValueError("radii must start at 0 and be nondecreasing")
        if r[-1] > self.space.r_max * (1 + 1e-12):
            raise ValueError("support exceeds the tabulated space")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        if v[-1] != 0:
            raise ValueError("the last value must be 0 (compact support)")
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "values", v)

    @property
    def support_radius(self) -> float:
        nz = np.nonzero(self.values)[0]
        return float(self.radii[nz[-1] + 1]) if nz.size else 0.0

    @property
    def maximum(self) -> float:
        return float(self.values.max())

    def __call__(self, r):
        """Left-continuous evaluation (upper value at a jump of a decreasing function)."""
        r = np.asarray(r, dtype=float)
        idx = np.searchsorted(self.radii, r, side="left")
        out = np.zeros_like(r)
        inside = idx < self.radii.size
        i = idx[inside]
        ri = r[inside]
        hit = self.radii[i] == ri
        prev = np.maximum(i - 1, 0)
        lo_r, hi_r = self.radii[prev], self.radii[i]
        lo_v, hi_v = self.values[prev], self.values[i]
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = np.where(hi_r > lo_r, (ri - lo_r) / (hi_r - lo_r), 1.0)
        val = lo_v + frac * (hi_v - lo_v)
        # at a node take the value of the first node with that radius
        val = np.where(hit, self.values[i], val)
        out[inside] = val
        return out

    def scaled(self, factor: float) -> "RadialFunction":
        return RadialFunction(self.space, self.radii, factor * self.values)


def _segments(u: RadialFunction):
    r, v = u.radii, u.values
    return r[:-1], r[1:], v[:-1], v[1:]


def _check_nonnegative(values):
    if np.any(np.asarray(values) < 0):
        raise ValueError("function must be nonnegative (split the sign first)")


def _crossings(ts, lo, hi, include_lo: bool):
    """(level index into sorted ts, segment index) for lo <= t < hi (or lo < t < hi)."""
    i0 = np.searchsorted(ts, lo, side="left" if include_lo else "right")
    i1 = np.searchsorted(ts, hi, side="left")
    count = np.maximum(i1 - i0, 0)
    seg = np.repeat(np.arange(lo.size), count)
    start = np.repeat(i0, count)
    offset = np.arange(seg.size) - np.repeat(np.cumsum(count) - count, count)
    return start + offset, seg


def level_data(u: RadialFunction, t, closed: bool = False):
    """Exact (A(t), -A'(t), Per({u > t})) at levels ``t`` > 0.

    With ``closed`` the measure is that of {u >= t} instead.
    """
    t = np.asarray(t, dtype=float)
    shape = t.shape
    tf = t.ravel()
    order = np.argsort(tf, kind="stable")
    ts = tf[order]
    s = u.space
    ra, rb, va, vb = _segments(u)
    lo, hi = np.minimum(va, vb), np.maximum(va, vb)
    jump = ra == rb
    A = np.zeros(ts.size)
    speed = np.zeros(ts.size)
    per = np.zeros(ts.size)
    # whole segments: {u > t} contains the shell when t < lo (t <= lo if closed)
    dV = s.volume_at(rb[~jump]) - s.volume_at(ra[~jump])
    key = lo[~jump]
    k_order = np.argsort(key, kind="stable")
    ksort = key[k_order]
    tail = np.concatenate([np.cumsum(dV[k_order][::-1])[::-1], [0.0]])
    A += tail[np.searchsorted(ksort, ts, side="left" if closed else "right")]
    # sloped segments crossed by the level
    sl = np.nonzero(~jump & (lo < hi))[0]
    li, si = _crossings(ts, lo[sl], hi[sl], include_lo=not closed)
    if li.size:
        si = sl[si]
        tp = ts[li]
        root = ra[si] + (tp - va[si]) / (vb[si] - va[si]) * (rb[si] - ra[si])
        Vr = s.volume_at(root)
        part = np.where(va[si] > vb[si], Vr - s.volume_at(ra[si]), s.volume_at(rb[si]) - Vr)
        P = s.perimeter_at(root)
        np.add.at(A, li, part)
        np.add.at(speed, li, P * (rb[si] - ra[si]) / (hi[si] - lo[si]))
        np.add.at(per, li, P)
    # vertical segments (jumps) contribute a sphere to the level-set boundary
    jm = np.nonzero(jump & (lo < hi))[0]
    lj, sj = _crossings(ts, lo[jm], hi[jm], include_lo=True)
    if lj.size:
        np.add.at(per, lj, s.perimeter_at(ra[jm][sj]))
    out = []
    for arr in (A, speed, per):
        back = np.empty_like(arr)
        back[order] = arr
        out.append(back.reshape(shape))
    return tuple(out)


@dataclass(frozen=True, eq=False)
class DistributionTable:
    """Tabulated distribution of a nonnegative function.

    ``levels`` decrease; ``measures`` are A(t) = mu({u > t}) and
    ``perimeters`` the perimeters of those superlevel sets. Quadrature
    levels carry positive ``weights`` and the exact ``speeds`` -A'(t);
    breakpoint levels carry weight 0. ``singular`` marks a level interval
    on which A is constant while the level sets have positive perimeter
    (a jump of the function).
    """

    levels: np.ndarray
    measures: np.ndarray
    perimeters: np.ndarray
    speeds: np.ndarray
    weights: np.ndarray
    breaks: np.ndarray
    closed_measures: np.ndarray
    singular: bool
    support_measure: float = 0.0
    total_measure: float = math.inf

    def __len__(self) -> int:
        return int(self.levels.size)


def _empty_table(total: float) -> DistributionTable:
    e = np.zeros(0)
    return DistributionTable(e, e, e, e, e, e, e, False, 0.0, total)


def _level_breaks(u: RadialFunction) -> np.ndarray:
    """Node values plus the values of u at space grid nodes inside sloped segments."""
    vals = [u.values]
    g = u.space.grid
    for ra, rb, va, vb in zip(*_segments(u)):
        if rb > ra and va != vb:
            inner = g[(g > ra) & (g < rb)]
            vals.append(va + (inner - ra) / (rb - ra) * (vb - va))
    b = np.unique(np.concatenate(vals))
    return b[b > 0]


def distribution(u) -> DistributionTable:
    """Distribution table of a nonnegative radial or discrete function."""
    if isinstance(u, DiscreteFunction):
        return _discrete_distribution(u.space.measures, u.values, u.space)
    _check_nonnegative(u.values)
    breaks = _level_breaks(u)
    if breaks.size == 0:
        return _empty_table(u.space.capacity)
    # geometric grading toward t = 0 keeps layer-cake weights t^(p-1) resolved
    # and so does splitting any later interval [a, b] with b > 2a at a * 2^k
    lo = np.concatenate([[breaks[0]], breaks[:-1]])
    extra = [a * 2.0 ** np.arange(1, math.ceil(math.log2(b / a))) for a, b in zip(lo, breaks) if b > 2 * a]
    edges = np.unique(np.concatenate([[0.0], breaks[0] * 2.0 ** -np.arange(40, 0, -1), breaks, *extra]))
    a, b = edges[:-1], edges[1:]
    gl_t = (a[:, None] + (b - a)[:, None] * GL_NODES).ravel()
    gl_w = ((b - a)[:, None] * GL_WEIGHTS).ravel()
    A, speed, per = level_data(u, gl_t)
    singular = bool(np.any((speed <= 0) & (per > 0)))
    Ab, _, perb = level_data(u, breaks)
    Ac, _, _ = level_data(u, breaks, closed=True)
    levels = np.concatenate([gl_t, breaks])
    order = np.argsort(-levels, kind="stable")
    return DistributionTable(
        levels[order], np.concatenate([A, Ab])[order], np.concatenate([per, perb])[order],
        np.concatenate([speed, np.zeros_like(breaks)])[order],
        np.concatenate([gl_w, np.zeros_like(breaks)])[order],
        breaks[::-1].copy(), Ac[::-1].copy(), singular, float(level_data(u, np.zeros(1))[0][0]),
        u.space.capacity)


def _discrete_distribution(mu, values, space: DiscreteMMS | None) -> DistributionTable:
    from .discrete import perimeter

    values = np.asarray(values, dtype=float)
    _check_nonnegative(values)
    levels = np.unique(values[values > 0])[::-1]
    total = float(np.sum(mu))
    if levels.size == 0:
        return _empty_table(total)
    closed = np.array([mu[values >= t].sum() for t in levels])
    opened = np.array([mu[values > t].sum() for t in levels])
    if space is not None:
        per = np.array([perimeter(space, values >= t) for t in levels])
    else:
        per = np.full(levels.size, np.nan)
    zeros = np.zeros_like(levels)
    return DistributionTable(levels, opened, per, zeros, zeros, levels.copy(), closed,
                             True, float(closed[-1]), total)


def coarea_gradient_norm(d: DistributionTable, p: float) -> float:
    """sum over quadrature levels of w (-A')^(1-p) l^p; +inf across jumps."""
    if not p > 1:
        raise ValueError("p must exceed 1")
    if d.singular:
        return math.inf
    q = d.weights > 0
    if not np.any(q):
        return 0.0
    return float(np.sum(d.weights[q] * d.speeds[q] ** (1 - p) * d.perimeters[q] ** p))


def rearranged_table(d: DistributionTable, target: RadialSpace) -> DistributionTable:
    """Same levels and measures, perimeters replaced by the target's radial profile."""
    if d.support_measure > target.capacity * (1 + 1e-12):
        raise ValueError("support measure exceeds the target capacity")
    per = np.zeros_like(d.measures)
    pos = d.measures > 0
    per[pos] = radial_profile(target, np.minimum(d.measures[pos], target.capacity))
    # a jump of the rearranged function sits on a sphere of positive area
    return DistributionTable(d.levels, d.measures, per, d.speeds, d.weights, d.breaks,
                             d.closed_measures, d.singular, d.support_measure, d.total_measure)


def radial_energy(u: RadialFunction, p: float) -> float:
    """Exact integral of |u'|^p over the space (+inf if u jumps)."""
    total = 0.0
    s = u.space
    for ra, rb, va, vb in zip(*_segments(u)):
        if va == vb:
            continue
        if ra == rb:
            return math.inf
        total += abs((vb - va) / (rb - ra)) ** p * (s.volume_at(rb) - s.volume_at(ra))
    return float(total)


def _segment_panels(u: RadialFunction):
    """Gauss-Legendre nodes/weights in r over each segment, split at grid nodes."""
    g = u.space.grid
    nodes, weights = [], []
    for ra, rb, _va, _vb in zip(*_segments(u)):
        if rb <= ra:
            continue
        cuts = np.concatenate([[ra], g[(g > ra) & (g < rb)], [rb]])
        a, b = cuts[:-1], cuts[1:]
        nodes.append((a[:, None] + (b - a)[:, None] * GL_NODES).ravel())
        weights.append(((b - a)[:, None] * GL_WEIGHTS).ravel())
    if not nodes:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(nodes), np.concatenate(weights)


def integrate_radial(u: RadialFunction, F) -> float:
    """Integral of F(u) over the ball of radius support_radius (F(0) = 0 assumed)."""
    x, w = _segment_panels(u)
    if x.size == 0:
        return 0.0
    return float(np.sum(w * u.space.perimeter_at(x) * F(u(x))))


def lp_norm(u, p: float) -> float:
    """||u||_p: direct quadrature for radial functions, exact sum for discrete ones,
    layer cake for distribution tables."""
    if isinstance(u, DistributionTable):
        q = u.weights > 0
        lc = float(np.sum(u.weights[q] * p * u.levels[q] ** (p - 1) * u.measures[q]))
        return lc ** (1 / p)
    if isinstance(u, DiscreteFunction):
        return float(np.sum(u.space.measures * np.abs(u.values) ** p)) ** (1 / p)
    return integrate_radial(u, lambda v: np.abs(v) ** p) ** (1 / p)


# -- rearrangement ---------------------------------------------------------------------

def _step_function(levels, closed_measures, target: RadialSpace) -> RadialFunction:
    """Nested-ball step function with value levels[j] on the ball of volume closed_measures[j]."""
    if closed_measures.size and closed_measures[-1] > target.capacity * (1 + 1e-12):
        raise ValueError("support measure exceeds the target capacity")
    R = target.radius_of_volume(np.minimum(closed_measures, target.capacity))
    radii = [0.0]
    values = [float(levels[0]) if levels.size else 0.0]
    for j, t in enumerate(levels):
        radii.append(float(R[j]))
        values.append(float(t))
        nxt = float(levels[j + 1]) if j + 1 < levels.size else 0.0
        radii.append(float(R[j]))
        values.append(nxt)
    if not levels.size:
        radii.append(target.grid[1])
        values.append(0.0)
    return RadialFunction(target, np.array(radii), np.array(values))


def decreasing_rearrangement(u, target: RadialSpace, tol: float = 2e-9) -> RadialFunction:
    """Radial nonincreasing function on ``target`` equimeasurable with ``u``.

    Radial sources give nodes (V_target^{-1}(A(t)), t) at every tabulated
    level, with plateaus where A jumps, then subdivided in r until linear
    interpolation meets u_hat within ``tol`` times max u. Discrete
    sources give the exact nested-ball step function.
    """
    d = distribution(u)
    if d.breaks.size == 0:
        return RadialFunction(target, np.array([0.0, target.grid[1]]), np.zeros(2))
    if d.support_measure > target.capacity * (1 + 1e-12):
        raise ValueError("support measure exceeds the target capacity")
    if isinstance(u, DiscreteFunction):
        return _step_function(d.breaks, d.closed_measures, target)
    # exact nodes at every tabulated level: breakpoints and quadrature levels
    t, A = d.levels, d.measures  # decreasing levels
    cap = target.capacity
    is_break = np.isin(t, d.breaks)
    closed = A.copy()
    closed[is_break] = d.closed_measures[np.searchsorted(-d.breaks, -t[is_break])]
    R_open = target.radius_of_volume(np.minimum(A, cap))
    R_closed = target.radius_of_volume(np.minimum(np.maximum(closed, A), cap))
    plateau = R_closed > R_open
    pos = np.arange(t.size) + np.concatenate([[0], np.cumsum(plateau)[:-1]])
    radii = np.empty(t.size + int(plateau.sum()) + 1)
    values = np.empty_like(radii)
    radii[pos], values[pos] = R_open, t
    radii[pos[plateau] + 1], values[pos[plateau] + 1] = R_closed[plateau], t[plateau]
    radii[-1] = float(target.radius_of_volume(min(d.support_measure, cap)))
    values[-1] = 0.0
    radii = np.maximum.accumulate(radii)
    radii[0] = 0.0
    if tol > 0:
        radii, values = _refine(u, target, radii, values, tol * max(u.maximum, 1e-300))
    return RadialFunction(target, *_drop_collinear(radii, values))


def _drop_collinear(radii, values, rtol: float = 1e-13):
    """Remove interior nodes lying on the chord of their neighbours."""
    if radii.size < 3:
        return radii, values
    scale = rtol * max(float(np.max(np.abs(values))), 1e-300)
    r0, r1, r2 = radii[:-2], radii[1:-1], radii[2:]
    v0, v1, v2 = values[:-2], values[1:-1], values[2:]
    width = r2 - r0
    chord = np.where(width > 0, v0 + (v2 - v0) * (r1 - r0) / np.where(width > 0, width, 1.0), np.nan)
    keep = np.ones(radii.size, dtype=bool)
    keep[1:-1] = ~(np.abs(chord - v1) <= scale) | (r1 == r0) | (r1 == r2)
    # reinstate nodes the compacted function would miss
    dropped = ~keep
    if np.any(dropped):
        approx = np.interp(radii[dropped], radii[keep], values[keep])
        keep[np.nonzero(dropped)[0][np.abs(approx - values[dropped]) > scale]] = True
    return radii[keep], values[keep]


def _bracketed_values(u, target: RadialSpace, rho, lo, hi, xtol: float = 0.0, iters: int = 60):
    """u_hat(rho) in the bracket [lo, hi] by an Illinois secant on A(t) - V(rho)."""
    vol = target.volume_at(rho)
    a, b = lo.copy(), hi.copy()
    fa = level_data(u, a)[0] - vol  # positive below the value
    fb = level_data(u, b)[0] - vol  # nonpositive at or above it
    side = np.zeros(a.size, dtype=int)
    for _ in range(iters):
        width = b - a
        done = width <= np.maximum(4e-16 * np.abs(b), xtol)
        if np.all(done):
            break
        denom = fa - fb
        safe = np.where(denom > 0, denom, 1.0)
        c = np.where(denom > 0, a + fa / safe * width, 0.5 * (a + b))
        c = np.clip(c, a + 1e-3 * width, b - 1e-3 * width)
        fc = level_data(u, c)[0] - vol
        up = (fc > 0) & ~done
        dn = (fc <= 0) & ~done
        fa = np.where(up, fc, np.where(dn & (side == 1), 0.5 * fa, fa))
        fb = np.where(dn, fc, np.where(up & (side == -1), 0.5 * fb, fb))
        a = np.where(up, c, a)
        b = np.where(dn, c, b)
        side = np.where(up, -1, np.where(dn, 1, side))
    return b


def _refine(u, target: RadialSpace, radii, values, tol: float, rounds: int = 6):
    """Subdivide sloped intervals until linear interpolation matches u_hat at midpoints.

    The midpoint error of linear interpolation scales like the squared
    width, so an interval missing by e is split into ceil(sqrt(e / tol))
    pieces at once.
    """
    for _ in range(rounds):
        sloped = (np.diff(radii) > 0) & (np.diff(values) != 0)
        idx = np.nonzero(sloped)[0]
        if idx.size == 0:
            break
        mid = 0.5 * (radii[idx] + radii[idx + 1])
        exact = _bracketed_values(u, target, mid, values[idx + 1], values[idx], 1e-3 * tol)
        err = np.abs(exact - 0.5 * (values[idx] + values[idx + 1]))
        bad = err > tol
        if not np.any(bad):
            break
        idx, err = idx[bad], err[bad]
        pieces = np.minimum(np.ceil(1.2 * np.sqrt(err / tol)), 4096).astype(int)
        pieces = np.maximum(pieces, 2)
        owner = np.repeat(idx, pieces - 1)
        frac = np.concatenate([np.arange(1, k) / k for k in pieces])
        new_r = radii[owner] + frac * (radii[owner + 1] - radii[owner])
        new_v = _bracketed_values(u, target, new_r, values[owner + 1], values[owner], 1e-3 * tol)
        radii = np.insert(radii, owner + 1, new_r)
        values = np.insert(values, owner + 1, new_v)
    return radii, values


def rearranged_value(u, target: RadialSpace, rho, iters: int = 200):
    """Exact u_hat(rho) = sup{t : A(t) > V_target(rho)} by bisection in t."""
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    vol = target.volume_at(rho)
    if isinstance(u, DiscreteFunction):
        mu, vals = u.space.measures, u.values
        measure = lambda t: np.array([mu[vals > x].sum() for x in t])  # noqa: E731
        top = float(vals.max())
    else:
        measure = lambda t: level_data(u, t)[0]  # noqa: E731
        top = u.maximum
    lo = np.zeros_like(rho)
    hi = np.full_like(rho, top)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        above = measure(mid) > vol
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
        if np.all(hi - lo <= 1e-15 * max(top, 1e-300)):
            break
    return np.where(measure(np.zeros_like(rho)) > vol, hi, 0.0)


def lifted_rearrangement(u: DiscreteFunction, target: RadialSpace) -> RadialFunction:
    """Monotone piecewise-linear lift of the step rearrangement of a discrete function.

    Vertices sorted by decreasing value (ties by index) occupy consecutive
    centered annuli of their measure; the lift interpolates linearly from
    each vertex value at the inner radius of its annulus to the next value
    at the outer radius, ending at 0. It has finite energy, unlike the step
    function, and agrees with it at the inner radius of every annulus.
    """
    v = u.values
    _check_nonnegative(v)
    order = np.lexsort((np.arange(v.size), -v))
    mu = u.space.measures[order]
    M = np.concatenate([[0.0], np.cumsum(mu)])
    if M[-1] > target.capacity * (1 + 1e-12):
        raise ValueError("total measure exceeds the target capacity")
    R = target.radius_of_volume(np.minimum(M, target.capacity))
    vals = np.concatenate([v[order], [0.0]])
    return RadialFunction(target, R, vals)


# -- Polya-Szego -------------------------------------------------------------------------

@dataclass(frozen=True)
class PolyaSzegoReport:
    lhs: float
    rhs: float
    holds: bool
    dominated: bool


def _certify_domination(u, target: RadialSpace, support: float) -> None:
    if isinstance(u, DiscreteFunction):
        table = iso_profile_bruteforce(u.space)
    else:
        if support <= 0:
            return
        t = np.geomspace(support * 1e-8, support, 200)
        table = ProfileTable(t, radial_profile(u.space, t), math.inf)
    rep = check_domination(table, target)
    if not rep.dominated:
        raise PreconditionError(
            f"target does not dominate the source profile (worst gap {rep.worst_gap:.3g})")


def polya_szego_check(u, target: RadialSpace, p: float, rtol: float = 1e-8,
                      atol: float = 1e-12) -> PolyaSzegoReport:
    """Compare the p-energy of the rearrangement with the Cheeger p-energy of u.

    Radial sources: lhs is the exact coarea energy of the rearrangement, rhs
    the exact energy of u. Discrete sources: lhs is the energy of the lifted
    rearrangement (the step rearrangement itself has infinite energy), rhs is
    Ch_p(u). Domination of the source profile by the target is certified
    first and a failure raises :class:`PreconditionError`.
    """
    if not p > 1:
        raise ValueError("p must exceed 1")
    if isinstance(u, DiscreteFunction):
        _certify_domination(u, target, 0.0)
        lhs = radial_energy(lifted_rearrangement(u, target), p)
        rhs = float(cheeger_energy(u.space, u.values, p))
    else:
        d = distribution(u)
        _certify_domination(u, target, d.support_measure)
        lhs = coarea_gradient_norm(rearranged_table(d, target), p)
        rhs = radial_energy(u, p)
    holds = lhs <= rhs + max(rtol * abs(rhs), atol)
    return PolyaSzegoReport(float(lhs), float(rhs), bool(holds), True)


# -- median and double rearrangement -------------------------------------------------------

def _atoms(u, measures=None):
    if isinstance(u, DiscreteFunction):
        return u.values, u.space.measures
    vals = np.asarray(u, dtype=float).ravel()
    mu = np.ones_like(vals) if measures is None else np.asarray(measures, dtype=float).ravel()
    if vals.shape != mu.shape or np.any(mu <= 0) or not np.all(np.isfinite(mu)):
        raise ValueError("need one positive finite measure per value")
    return vals, mu


def median_interval(u, measures=None, rtol: float = 1e-12):
    """Closed interval of c with mu({u < c}) <= M/2 and mu({u > c}) <= M/2."""
    vals, mu = _atoms(u, measures)
    half = 0.5 * mu.sum() * (1 + rtol)
    cand = np.unique(vals)
    above = np.array([mu[vals > c].sum() for c in cand])
    below = np.array([mu[vals < c].sum() for c in cand])
    lower = cand[np.argmax(above <= half)]
    upper = cand[len(cand) - 1 - np.argmax((below <= half)[::-1])]
    return float(lower), float(upper)


def median(u, measures=None) -> float:
    """Midpoint of the median interval, checked against both defining inequalities."""
    vals, mu = _atoms(u, measures)
    if not math.isfinite(mu.sum()):
        raise ValueError("median needs finite total measure")
    lo, hi = median_interval(vals, mu)
    c = 0.5 * (lo + hi)
    half = 0.5 * mu.sum() * (1 + 1e-12)
    if mu[vals < c].sum() > half or mu[vals > c].sum() > half:
        raise ArithmeticError("median post-check failed")
    return c


@dataclass(frozen=True)
class GapReport:
    lhs: float
    rhs: float
    holds: bool


def median_average_gap_check(u, p: float, measures=None, tol: float = 1e-12) -> GapReport:
    """|c - mean(u)| <= (2/M)^(1/p) ||u - mean(u)||_p."""
    vals, mu = _atoms(u, measures)
    if p < 1:
        raise ValueError("p must be at least 1")
    M = mu.sum()
    mean = float(np.sum(mu * vals) / M)
    c = median(vals, mu)
    lhs = abs(c - mean)
    rhs = float((2 / M) ** (1 / p) * np.sum(mu * np.abs(vals - mean) ** p) ** (1 / p))
    return GapReport(lhs, rhs, bool(lhs <= rhs + tol * max(1.0, rhs)))


@dataclass(frozen=True, eq=False)
class MedianSplit:
    c: float
    u_plus: RadialFunction
    u_minus: RadialFunction
    omega_volume: float
    source: DiscreteFunction | None = None


def double_rearrangement(u, target: RadialSpace, measures=None) -> MedianSplit:
    """Rearrange the parts of u above and below its median separately.

    Both parts live in the centered ball Omega of volume M/2.
    """
    vals, mu = _atoms(u, measures)
    M = float(mu.sum())
    if target.capacity < 0.5 * M * (1 - 1e-12):
        raise ValueError("target capacity is below half the total measure")
    c = median(vals, mu)
    plus = np.maximum(vals - c, 0.0)
    minus = np.maximum(c - vals, 0.0)
    dp = _discrete_distribution(mu, plus, None)
    dm = _discrete_distribution(mu, minus, None)
    src = u if isinstance(u, DiscreteFunction) else None
    return MedianSplit(c, _step_function(dp.breaks, dp.closed_measures, target),
                       _step_function(dm.breaks, dm.closed_measures, target), 0.5 * M, src)


def _step_integral(f: RadialFunction, F) -> float:
    """Exact integral of F(f) for a nested-ball step function (F(0) = 0)."""
    total = 0.0
    s = f.space
    for ra, rb, va, vb in zip(*_segments(f)):
        if rb > ra:
            if va != vb:
                raise ValueError("not a step function")
            total += F(va) * (s.volume_at(rb) - s.volume_at(ra))
    return float(total)


@dataclass(frozen=True)
class SplitReport:
    lhs: float
    rhs: float
    identity_holds: bool
    energy_lhs: float
    energy_rhs: float
    gradient_holds: bool


def split_identity_check(split: MedianSplit, F, u=None, measures=None, p: float = 2.0,
                         rtol: float = 1e-10) -> SplitReport:
    """Check int F(u - c) = int_Omega F(u_+) + int_Omega F(-u_-) and the energy split.

    ``F`` must satisfy F(0) = 0. The gradient inequality compares the lifted
    rearrangements of (u - c)_+ and (c - u)_+ with Ch_p(u) and needs a
    discrete source with its graph.
    """
    if abs(F(0.0)) > 0:
        raise PreconditionError("F must vanish at 0 (F(u - c) vanishes where u = c)")
    u = split.source if u is None else u
    vals, mu = _atoms(u, measures)
    c = split.c
    lhs = float(np.sum(mu * np.array([F(x) for x in vals - c])))
    rhs = _step_integral(split.u_plus, F) + _step_integral(split.u_minus, lambda x: F(-x))
    scale = max(abs(lhs), float(np.sum(mu * np.abs([F(x) for x in vals - c]))), 1e-300)
    identity = abs(lhs - rhs) <= rtol * scale
    e_lhs = e_rhs = math.nan
    grad = True
    if isinstance(u, DiscreteFunction):
        target = split.u_plus.space
        g = u.space
        up = lifted_rearrangement(DiscreteFunction(g, np.maximum(u.values - c, 0)), target)
        um = lifted_rearrangement(DiscreteFunction(g, np.maximum(c - u.values, 0)), target)
        e_lhs = radial_energy(up, p) + radial_energy(um, p)
        e_rhs = float(cheeger_energy(g, u.values, p))
        grad = e_lhs <= e_rhs + max(1e-8 * e_rhs, 1e-12)
    return SplitReport(lhs, rhs, bool(identity), e_lhs, e_rhs, bool(grad))
