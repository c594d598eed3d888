"""Moser-Trudinger functionals, thresholds and the compact-case certificates.

F_m(t) = e^|t| - sum_{j<=m-2} |t|^j / j! throughout; u^q means |u|^q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.special import gammaln, logsumexp

from ._numerics import GL_NODES, GL_WEIGHTS
from .discrete import DiscreteFunction, cheeger_energy
from .errors import PreconditionError
from .modelgeom import unit_sphere_area
from .radial import RadialSpace, radial_space
from .rearrange import (
    MedianSplit,
    RadialFunction,
    _atoms,
    _level_breaks,
    integrate_radial,
    level_data,
    lifted_rearrangement,
    radial_energy,
)

SERIES_CUTOFF = 1.0
SERIES_TERMS = 40
PANEL_CAP = 4096
OVERFLOW = 1e300


@dataclass(frozen=True)
class MTParams:
    m: int
    alpha: float

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise ValueError("m must be an integer >= 2")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")

    @property
    def exponent(self) -> float:
        return self.m / (self.m - 1)


def _tail_ratio(m: int, a):
    """sum_{k>=0} a^k (m-1)! / (m-1+k)!, the tail series over its leading term."""
    term = np.ones_like(a)
    total = np.ones_like(a)
    for k in range(1, SERIES_TERMS):
        term = term * a / (m - 1 + k)
        total = total + term
    return total


def _poly(m: int, a):
    """sum_{j=0}^{m-2} a^j / j!."""
    out = np.zeros_like(a)
    term = np.ones_like(a)
    for j in range(m - 1):
        out = out + term
        term = term * a / (j + 1)
    return out


def truncated_exp(m: int, t):
    """F_m(t); the tail series is used for |t| < 1 to avoid cancellation.

    m = 1 gives e^|t| (the derivative of F_2).
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    a = np.abs(np.asarray(t, dtype=float))
    small = a < SERIES_CUTOFF
    out = np.empty_like(a)
    s = a[small]
    out[small] = s ** (m - 1) * _tail_ratio(m, s) / math.factorial(m - 1)
    b = a[~small]
    with np.errstate(over="ignore"):
        out[~small] = np.exp(b) - _poly(m, b)
    return float(out) if out.ndim == 0 else out


def log_truncated_exp(m: int, t):
    """log F_m(t), finite for arguments far beyond the exp overflow."""
    if m < 1:
        raise ValueError("m must be >= 1")
    a = np.abs(np.asarray(t, dtype=float))
    out = np.empty_like(a)
    small = a < SERIES_CUTOFF
    s = a[small]
    if m == 1:
        out[small] = s
    else:
        with np.errstate(divide="ignore"):
            out[small] = (m - 1) * np.log(s) - gammaln(m) + np.log(_tail_ratio(m, s))
    b = a[~small]
    with np.errstate(over="ignore", under="ignore"):
        out[~small] = b + np.log1p(-_poly(m, b) * np.exp(-b))
    return float(out) if out.ndim == 0 else out


def mt_threshold(m: int, beta: float = 1.0) -> float:
    """m (beta s_{m-1})^(1/(m-1)), s_{m-1} the area of the unit sphere in R^m."""
    if int(m) != m or m < 2:
        raise ValueError("m must be an integer >= 2")
    if not (0 < beta <= 1):
        raise ValueError("beta must lie in (0, 1]")
    return m * (beta * unit_sphere_area(m)) ** (1 / (m - 1))


@dataclass(frozen=True)
class MTReport:
    energy: float
    functional_value: float
    log_value: float
    admissible: bool
    overflow: bool


def _abs_radial(u: RadialFunction) -> RadialFunction:
    """|u| with zero crossings inserted as nodes, so it stays piecewise linear."""
    r, v = u.radii, u.values
    rr, vv = [r[0]], [abs(v[0])]
    for i in range(r.size - 1):
        if v[i] * v[i + 1] < 0:
            rz = r[i] + v[i] / (v[i] - v[i + 1]) * (r[i + 1] - r[i])
            rr.append(rz)
            vv.append(0.0)
        rr.append(r[i + 1])
        vv.append(abs(v[i + 1]))
    return RadialFunction(u.space, np.array(rr), np.array(vv))


def _log_radial_functional(u: RadialFunction, p: MTParams) -> float:
    """log of int F_m(alpha |u|^q) by the layer cake in the level variable."""
    u = _abs_radial(u)
    breaks = _level_breaks(u)
    if breaks.size == 0:
        return -math.inf
    q, m, alpha = p.exponent, p.m, p.alpha
    edges = np.concatenate([[0.0], breaks])
    a, b = edges[:-1], edges[1:]
    # split level intervals so the exponent alpha t^q grows by at most ~2 per panel
    growth = alpha * (b**q - a**q)
    pieces = np.clip(np.ceil(growth / 2.0), 1, PANEL_CAP).astype(int)
    owner = np.repeat(np.arange(a.size), pieces)
    start = np.concatenate([[0], np.cumsum(pieces)[:-1]])
    frac = np.arange(owner.size) - np.repeat(start, pieces)
    h = (b - a)[owner] / pieces[owner]
    pa = a[owner] + frac * h
    t = pa[:, None] + h[:, None] * GL_NODES
    w = h[:, None] * GL_WEIGHTS
    A, speed, _ = level_data(u, t.ravel())
    A, speed = A.reshape(t.shape), speed.reshape(t.shape)
    flat = np.all(speed <= 0, axis=1)
    a, b = pa, pa + h
    terms = []
    # smooth intervals: int G'(t) A(t) dt with G(t) = F_m(alpha t^q)
    with np.errstate(divide="ignore"):
        logG1 = (log_truncated_exp(m - 1, alpha * t**q) + math.log(alpha * q)
                 + (q - 1) * np.log(t))
        smooth = ~flat[:, None] & (A > 0)
        terms.append((np.log(w) + logG1 + np.log(np.where(A > 0, A, 1.0)))[smooth])
        # flat intervals (jumps of u): A is constant, integrate G' exactly
        if np.any(flat):
            Af = A[flat, 0]
            hi = log_truncated_exp(m, alpha * b[flat] ** q)
            lo = log_truncated_exp(m, alpha * a[flat] ** q)
            diff = hi + np.log1p(-np.exp(np.minimum(lo - hi, 0.0)))
            keep = Af > 0
            terms.append((np.log(Af[keep]) + diff[keep]))
    allterms = np.concatenate(terms)
    return float(logsumexp(allterms)) if allterms.size else -math.inf


def mt_functional(u, params: MTParams, measures=None) -> MTReport:
    """int F_m(alpha |u|^(m/(m-1))) with the p = m energy of u alongside.

    Discrete or atomic input is summed exactly; radial input uses the
    level-based layer cake, exact on plateaus and jumps.
    """
    q, m, alpha = params.exponent, params.m, params.alpha
    if isinstance(u, RadialFunction):
        logv = _log_radial_functional(u, params)
        energy = radial_energy(u, m)
    else:
        vals, mu = _atoms(u, measures)
        x = alpha * np.abs(vals) ** q
        pos = x > 0
        with np.errstate(divide="ignore"):
            logs = np.log(mu[pos]) + log_truncated_exp(m, x[pos])
        logv = float(logsumexp(logs)) if logs.size else -math.inf
        energy = float(cheeger_energy(u.space, u.values, m)) if isinstance(u, DiscreteFunction) \
            else math.nan
    overflow = logv > math.log(OVERFLOW)
    value = math.inf if overflow else (math.exp(logv) if logv > -math.inf else 0.0)
    admissible = bool(energy <= 1 + 1e-12) if not math.isnan(energy) else False
    return MTReport(energy, value, logv, admissible, bool(overflow))


# -- trumpet scaling ----------------------------------------------------------------------

@dataclass(frozen=True)
class ScalingReport:
    beta: float
    n: int
    energy_ratio: float
    integral_ratio: float
    energy_error: float
    integral_error: float
    holds: bool


def _trumpet_beta(space: RadialSpace) -> float:
    if space.meta.get("kind") != "trumpet":
        raise PreconditionError("function must live on a hyperbolic trumpet")
    return float(space.meta["beta"])


def trumpet_scaling_check(u: RadialFunction, alpha: float = 1.0, tol: float = 1e-10) -> ScalingReport:
    """Compare u on the beta-trumpet with the same radial profile on H^n.

    The warp differs by the constant factor beta^(1/(n-1)), so the n-energy
    ratio is beta^(1/n) and every volume integral scales by beta.
    """
    beta = _trumpet_beta(u.space)
    n = u.space.n
    s = u.space
    h = radial_space(n, s.grid, s.warp / beta ** (1 / (n - 1)), f"trumpet(n={n}, beta=1)",
                     kind="trumpet", beta=1.0)
    v = RadialFunction(h, u.radii, u.values)
    e_beta, e_one = radial_energy(u, n), radial_energy(v, n)
    energy_ratio = (e_beta / e_one) ** (1 / n) if e_one > 0 else 1.0
    params = MTParams(n, alpha)
    lb, l1 = _log_radial_functional(u, params), _log_radial_functional(v, params)
    integral_ratio = math.exp(lb - l1) if l1 > -math.inf else 1.0
    ee = abs(energy_ratio - beta ** (1 / n))
    ie = abs(integral_ratio - beta)
    return ScalingReport(beta, n, energy_ratio, integral_ratio, ee, ie,
                         bool(ee <= tol and ie <= tol))


# -- compact-case certificates ---------------------------------------------------------------

def plaplacian_lower_bound_trumpet(n: int, beta: float) -> float:
    """beta^(1/(n-1)) ((n-1)/n)^n, a lower bound for the first n-Laplace eigenvalue."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if not (0 < beta <= 1):
        raise ValueError("beta must lie in (0, 1]")
    return beta ** (1 / (n - 1)) * ((n - 1) / n) ** n


@dataclass(frozen=True)
class RayleighCheck:
    bound: float
    numeric: float
    holds: bool
    parameters: tuple


def plaplacian_rayleigh_check(space: RadialSpace, restarts: int = 4) -> RayleighCheck:
    """Minimize int |f'|^n / int |f|^n over f = (R - r)_+^a e^(-b r) on a trumpet.

    Every test function gives an upper estimate of the eigenvalue, so the
    minimum found must stay above the lower bound.
    """
    beta = _trumpet_beta(space)
    n = space.n
    bound = plaplacian_lower_bound_trumpet(n, beta)
    g = space.grid
    a_, b_ = g[:-1], g[1:]
    x = (a_[:, None] + (b_ - a_)[:, None] * GL_NODES).ravel()
    w = ((b_ - a_)[:, None] * GL_WEIGHTS).ravel() * space.perimeter_at(x)

    def quotient(theta):
        a, b, R = math.exp(theta[0]), theta[1], min(space.r_max, math.exp(theta[2]))
        inside = x < R
        d = R - x[inside]
        f = d**a * np.exp(-b * x[inside])
        df = -(a * d ** (a - 1) + b * d**a) * np.exp(-b * x[inside])
        num = np.sum(w[inside] * np.abs(df) ** n)
        den = np.sum(w[inside] * np.abs(f) ** n)
        return num / den if den > 0 else math.inf

    best = (math.inf, None)
    rng = np.random.default_rng(0)
    for k in range(restarts):
        start = [math.log(1.0 + k), (n - 1) / n * (1 + 0.1 * rng.standard_normal()),
                 math.log(space.r_max)]
        res = minimize(quotient, start, method="Nelder-Mead",
                       options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": 4000})
        if res.fun < best[0]:
            best = (float(res.fun), tuple(res.x))
    return RayleighCheck(bound, best[0], bool(best[0] >= bound), best[1])


@dataclass(frozen=True)
class GradientBoundReport:
    lhs: float
    rhs: float
    holds: bool


def _omega_radius(space: RadialSpace, omega_volume: float) -> float:
    if not 0 < omega_volume <= space.capacity * (1 + 1e-12):
        raise ValueError("Omega volume outside the tabulated range")
    return float(space.radius_of_volume(min(omega_volume, space.capacity)))


def gradient_bound_preconditions(offset: RadialFunction, c: float, omega_volume: float) -> list:
    """Failed hypotheses for u = c + offset, offset supported in Omega."""
    failures = []
    if not c > 0:
        failures.append("c must be positive")
    R = _omega_radius(offset.space, omega_volume)
    if offset.support_radius > R * (1 + 1e-12):
        failures.append("u - c is not supported in Omega")
    if np.any(offset.values > 0):
        failures.append("u <= c fails")
    integral = integrate_radial(offset, lambda v: v) + c * omega_volume
    if integral > -2 * c * omega_volume * (1 - 1e-12):
        failures.append(f"int_Omega u = {integral:.6g} exceeds -2 c sigma(Omega) = "
                        f"{-2 * c * omega_volume:.6g}")
    return failures


def better_gradient_bound(offset: RadialFunction, c: float, omega_volume: float, beta: float,
                          n: int | None = None, tol: float = 1e-10) -> GradientBoundReport:
    """||grad u||_n^n >= beta^(1/(n-1)) (3(1-1/n))^n c^n sigma(Omega).

    ``offset`` is u - c as a radial function on the trumpet (zero outside
    Omega). Hypotheses: u <= c and int_Omega u <= -2 c sigma(Omega).
    """
    n = offset.space.n if n is None else n
    failures = gradient_bound_preconditions(offset, c, omega_volume)
    if failures:
        raise PreconditionError("; ".join(failures))
    lhs = radial_energy(offset, n)
    rhs = beta ** (1 / (n - 1)) * (3 * (1 - 1 / n)) ** n * c**n * omega_volume
    return GradientBoundReport(lhs, rhs, bool(lhs >= rhs - tol * max(1.0, rhs)))


@dataclass(frozen=True)
class Step2Report:
    c: float
    C6: float
    grad_plus: float
    grad_minus: float
    grad_plus_bound: float
    holds: bool


def step2_certificate(split: MedianSplit, m: int, beta: float, tol: float = 1e-9) -> Step2Report:
    """Certify ||grad u_+||^m <= 1 - ||grad u_-||^m <= 1 - C6 c^m sigma(Omega).

    The source must be a discrete function with zero average, Ch_m <= 1 and
    nonnegative median; gradients of u_+/- are those of the lifted
    rearrangements. The gradient lemma is applied to c - u_-, whose
    hypotheses are checked explicitly (zero average alone only guarantees
    int_Omega (c - u_-) <= -c sigma(Omega)).
    """
    u = split.source
    if not isinstance(u, DiscreteFunction):
        raise PreconditionError("step 2 needs the discrete source function")
    mu = u.space.measures
    failures = []
    scale = float(np.sum(mu * np.abs(u.values))) + 1e-300
    if abs(float(np.sum(mu * u.values))) > 1e-12 * scale:
        failures.append("u must have zero average")
    energy = float(cheeger_energy(u.space, u.values, m))
    if energy > 1 + 1e-12:
        failures.append(f"Ch_m(u) = {energy:.6g} exceeds 1")
    c = split.c
    if c < 0:
        failures.append("median must be nonnegative")
    target = split.u_plus.space
    g = u.space
    up = lifted_rearrangement(DiscreteFunction(g, np.maximum(u.values - c, 0)), target)
    um = lifted_rearrangement(DiscreteFunction(g, np.maximum(c - u.values, 0)), target)
    C6 = beta ** (1 / (m - 1)) * (3 * (1 - 1 / m)) ** m
    if c > 0 and not failures:
        offset = RadialFunction(target, um.radii, -um.values)
        failures += gradient_bound_preconditions(offset, c, split.omega_volume)
    if failures:
        raise PreconditionError("; ".join(failures))
    e_plus, e_minus = radial_energy(up, m), radial_energy(um, m)
    bound = 1 - C6 * c**m * split.omega_volume
    holds = e_plus <= 1 - e_minus + tol and 1 - e_minus <= bound + tol
    return Step2Report(c, C6, e_plus, e_minus, bound, bool(holds))


@dataclass(frozen=True)
class Step3Report:
    min_numeric: float
    min_closed: float
    argmin: float
    relative_error: float
    holds: bool


def step3_envelope(m: int, R: float, c: float, tol: float = 1e-6) -> Step3Report:
    """Minimum over t >= 0 of t^q / R - (t + c)^q, q = m/(m-1).

    Calculus gives -c^q / (1 - R^(m-1))^(1/(m-1)) at t* = c R^(m-1)/(1 - R^(m-1)).
    """
    if not 0 < R < 1:
        raise ValueError("R must lie in (0, 1)")
    if not c > 0 or m < 2:
        raise ValueError("need c > 0 and m >= 2")
    q = m / (m - 1)

    def h(t):
        return t**q / R - (t + c) ** q

    t = np.concatenate([[0.0], np.geomspace(c * 1e-12, c * 1e12, 4001)])
    vals = h(t)
    k = int(np.argmin(vals))
    lo, hi = t[max(k - 1, 0)], t[min(k + 1, t.size - 1)]
    res = minimize_scalar(h, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-14 * max(hi, 1e-300)})
    best_t, best = (res.x, res.fun) if res.fun < vals[k] else (t[k], vals[k])
    closed = -(c**q) / (1 - R ** (m - 1)) ** (1 / (m - 1))
    rel = abs(best - closed) / abs(closed)
    return Step3Report(float(best), float(closed), float(best_t), float(rel), bool(rel <= tol))
