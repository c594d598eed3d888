"""Finite weighted graphs as metric measure spaces.

Vertices carry measures, edges carry a length (for slopes) and a cross
weight (for perimeters). Perimeter is cut weight, the slope of f at i is
max over neighbours j of |f_i - f_j| / d_ij, and Ch_p(f) = sum mu_i lip(f)_i^p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import BudgetError
from .radial import ProfileTable

ENUMERATION_BUDGET = 24


@dataclass(frozen=True, eq=False)
class DiscreteMMS:
    """Connected weighted graph; ``edges`` rows are (i, j, d_ij, w_ij)."""

    measures: np.ndarray
    edges: np.ndarray
    label: str = ""

    def __post_init__(self):
        mu = np.asarray(self.measures, dtype=float)
        e = np.asarray(self.edges, dtype=float).reshape(-1, 4)
        if mu.ndim != 1 or mu.size < 2:
            raise ValueError("need at least two vertices")
        if not np.all(np.isfinite(mu)) or np.any(mu <= 0):
            raise ValueError("vertex measures must be positive and finite")
        i, j = e[:, 0], e[:, 1]
        if np.any(i != np.round(i)) or np.any(j != np.round(j)):
            raise ValueError("edge endpoints must be vertex indices")
        i, j = i.astype(int), j.astype(int)
        if np.any((i < 0) | (j < 0) | (i >= mu.size) | (j >= mu.size)) or np.any(i == j):
            raise ValueError("edge endpoints out of range or loops present")
        if np.any(~np.isfinite(e[:, 2:])) or np.any(e[:, 2:] <= 0):
            raise ValueError("edge lengths and weights must be positive")
        key = np.sort(np.stack([i, j], axis=1), axis=1)
        if np.unique(key, axis=0).shape[0] != key.shape[0]:
            raise ValueError("duplicate edges")
        V = mu.size
        graph = coo_matrix((np.ones(len(i)), (i, j)), shape=(V, V))
        if connected_components(graph, directed=False)[0] != 1:
            raise ValueError("graph must be connected")
        W = np.zeros((V, V))
        W[i, j] = W[j, i] = e[:, 3]
        inv_d = np.zeros((V, V))
        inv_d[i, j] = inv_d[j, i] = 1.0 / e[:, 2]
        object.__setattr__(self, "measures", mu)
        object.__setattr__(self, "edges", e)
        object.__setattr__(self, "_W", W)
        object.__setattr__(self, "_inv_d", inv_d)

    @property
    def size(self) -> int:
        return int(self.measures.size)

    @property
    def total_measure(self) -> float:
        return float(self.measures.sum())

    @property
    def weight_matrix(self) -> np.ndarray:
        return self._W

    @property
    def inverse_lengths(self) -> np.ndarray:
        """Matrix of 1/d_ij on edges, 0 elsewhere."""
        return self._inv_d

    def scaled(self, measure: float = 1.0, length: float = 1.0, weight: float = 1.0) -> "DiscreteMMS":
        e = self.edges.copy()
        e[:, 2] *= length
        e[:, 3] *= weight
        return DiscreteMMS(self.measures * measure, e, self.label)


@dataclass(frozen=True, eq=False)
class DiscreteFunction:
    space: DiscreteMMS
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.space.size,) or not np.all(np.isfinite(v)):
            raise ValueError("need one finite value per vertex")
        object.__setattr__(self, "values", v)


def slope(s: DiscreteMMS, f) -> np.ndarray:
    """lip(f) at each vertex; ``f`` may carry leading batch axes."""
    f = np.asarray(f, dtype=float)
    diff = np.abs(f[..., :, None] - f[..., None, :]) * s.inverse_lengths
    return diff.max(axis=-1)


def cheeger_energy(s: DiscreteMMS, f, p: float):
    """Ch_p(f) = sum_i mu_i lip(f)_i^p."""
    return (s.measures * slope(s, f) ** p).sum(axis=-1)


def _mask(s: DiscreteMMS, A) -> np.ndarray:
    A = np.asarray(A)
    if A.dtype == bool:
        if A.shape != (s.size,):
            raise ValueError("boolean subset must have one entry per vertex")
        return A
    m = np.zeros(s.size, dtype=bool)
    idx = A.astype(int).ravel()
    if np.any((idx < 0) | (idx >= s.size)):
        raise ValueError("vertex index out of range")
    m[idx] = True
    return m


def perimeter(s: DiscreteMMS, A) -> float:
    """Cut weight sum_{i in A, j not in A} w_ij."""
    m = _mask(s, A)
    return float(s.weight_matrix[np.ix_(m, ~m)].sum())


def measure(s: DiscreteMMS, A) -> float:
    return float(s.measures[_mask(s, A)].sum())


def _enumerate(s: DiscreteMMS):
    """Measure and cut weight of every subset, indexed by bitmask."""
    V = s.size
    if V > ENUMERATION_BUDGET:
        raise BudgetError(f"{V} vertices exceeds the enumeration budget of {ENUMERATION_BUDGET}")
    W = s.weight_matrix
    deg = W.sum(axis=1)
    meas = np.zeros(1 << V)
    cut = np.zeros(1 << V)
    for k in range(V):
        lo, hi = 1 << k, 1 << (k + 1)
        # weight from vertex k into each subset of {0..k-1}
        into = np.zeros(lo)
        for j in range(k):
            into[1 << j:1 << (j + 1)] = into[:1 << j] + W[k, j]
        meas[lo:hi] = meas[:lo] + s.measures[k]
        cut[lo:hi] = cut[:lo] + deg[k] - 2.0 * into
    return meas, cut


def _mask_of(bits: int, V: int) -> tuple:
    return tuple(i for i in range(V) if bits >> i & 1)


def iso_profile_bruteforce(s: DiscreteMMS, digits: int = 12) -> ProfileTable:
    """Exact profile: least cut weight among proper subsets of each achievable measure.

    Measures agreeing to ``digits`` digits relative to mu(X) are merged.
    """
    meas, cut = _enumerate(s)
    meas, cut = meas[1:-1], cut[1:-1]
    key = np.round(meas, digits - int(math.ceil(math.log10(s.total_measure))))
    order = np.lexsort((cut, key))
    key, cut = key[order], cut[order]
    first = np.concatenate([[True], key[1:] != key[:-1]])
    return ProfileTable(key[first], cut[first], s.total_measure)


@dataclass(frozen=True)
class CheegerReport:
    h: float
    witness: tuple
    lambda_p: dict = field(default_factory=dict)
    inequality_holds: dict = field(default_factory=dict)


def cheeger_constant(s: DiscreteMMS) -> CheegerReport:
    """Exact min of Per(A)/mu(A) over nonempty A with 2 mu(A) <= mu(X)."""
    meas, cut = _enumerate(s)
    ok = meas <= 0.5 * s.total_measure * (1 + 1e-12)
    ok[0] = False
    ratio = np.where(ok, cut / np.where(ok, meas, 1.0), np.inf)
    best = int(np.argmin(ratio))
    return CheegerReport(float(ratio[best]), _mask_of(best, s.size))


# -- p-spectral gap ----------------------------------------------------------------

def best_shift(f, mu, p: float, iters: int = 60):
    """argmin_c sum_i mu_i |f_i - c|^p (batched over leading axes).

    The derivative in c is monotone; safeguarded Newton on it, falling back
    to bisection whenever the Newton step leaves the bracket.
    """
    f = np.asarray(f, dtype=float)
    if p == 2:
        return (f * mu).sum(axis=-1) / mu.sum()
    lo, hi = f.min(axis=-1), f.max(axis=-1)
    tol = 1e-13 * (hi - lo) + 1e-300
    c = (f * mu).sum(axis=-1) / mu.sum()
    for _ in range(iters):
        d = f - c[..., None]
        a = np.abs(d)
        g = (mu * a ** (p - 1) * np.sign(d)).sum(axis=-1)
        settled = np.abs(g) <= 1e-13 * (mu * a ** (p - 1)).sum(axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            dg = (p - 1) * (mu * a ** (p - 2)).sum(axis=-1)
            newton = c + g / dg
        lo = np.where(g > 0, c, lo)
        hi = np.where(g > 0, hi, c)
        ok = np.isfinite(newton) & (newton > lo) & (newton < hi)
        c_new = np.where(settled, c, np.where(ok, newton, 0.5 * (lo + hi)))
        done = settled | (hi - lo <= tol)
        c = c_new
        if np.all(done):
            break
    return c


def rayleigh_quotient(s: DiscreteMMS, f, p: float):
    """Ch_p(f) / inf_c sum mu |f - c|^p (nan for constant f)."""
    f = np.asarray(f, dtype=float)
    c = best_shift(f, s.measures, p)
    den = (s.measures * np.abs(f - c[..., None]) ** p).sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > 0, cheeger_energy(s, f, p) / den, np.nan)


def _normalize(s, F, p):
    F = F - best_shift(F, s.measures, p)[:, None]
    den = (s.measures * np.abs(F) ** p).sum(axis=1)
    return F / den[:, None] ** (1 / p)


def _gradient(s, F, p):
    """Gradient of Ch_p - Q * (shifted p-norm) at normalized F (batch rows)."""
    mu, inv_d = s.measures, s.inverse_lengths
    diff = F[:, :, None] - F[:, None, :]
    ratio = np.abs(diff) * inv_d
    arg = ratio.argmax(axis=2)
    rows = np.arange(F.shape[0])[:, None]
    verts = np.arange(F.shape[1])[None, :]
    lip = ratio[rows, verts, arg]
    coef = mu * p * lip ** (p - 1) * np.sign(diff[rows, verts, arg]) * inv_d[verts, arg]
    grad = np.zeros_like(F)
    grad += coef
    np.add.at(grad, (np.broadcast_to(rows, arg.shape), arg), -coef)
    Q = (mu * lip**p).sum(axis=1)
    grad -= Q[:, None] * mu * p * np.abs(F) ** (p - 1) * np.sign(F)
    return Q, grad


@dataclass(frozen=True)
class GapEstimate:
    value: float
    witness: np.ndarray


def spectral_gap(s: DiscreteMMS, p: float, restarts: int = 20, iters: int = 400,
                 seed: int = 0) -> GapEstimate:
    """Upper estimate of lambda_p by multi-start projected gradient descent.

    Each iterate is shifted to its best constant and scaled to unit shifted
    p-norm, so the objective is Ch_p on that normalized set.
    """
    if not p > 1:
        raise ValueError("p must exceed 1")
    rng = np.random.default_rng(seed)
    V = s.size
    starts = [rng.standard_normal((restarts, V))]
    starts.append(np.eye(V))
    F = _normalize(s, np.concatenate(starts), p)
    Q, G = _gradient(s, F, p)
    step = np.full(F.shape[0], 0.1)
    best, stall = Q.min(), 0
    for _ in range(iters):
        # unit-sup direction keeps the trajectory invariant under rescaling lengths
        scale = np.abs(G).max(axis=1)
        direction = G / np.where(scale > 0, scale, 1.0)[:, None]
        trial = _normalize(s, F - step[:, None] * direction, p)
        Qt, Gt = _gradient(s, trial, p)
        better = Qt < Q
        F = np.where(better[:, None], trial, F)
        G = np.where(better[:, None], Gt, G)
        Q = np.where(better, Qt, Q)
        step = np.where(better, step * 1.2, step * 0.5)
        stall = stall + 1 if Q.min() > best * (1 - 1e-10) else 0
        best = min(best, Q.min())
        if np.all(step < 1e-12) or stall >= 40:
            break
    best = int(np.argmin(Q))
    return GapEstimate(float(Q[best]), F[best].copy())


@dataclass(frozen=True)
class CheegerCheck:
    h: float
    lambda_p_estimate: float
    holds: bool
    witness_set: tuple
    witness_function: np.ndarray


def cheeger_inequality_check(s: DiscreteMMS, p: float, tol: float = 1e-9, **gap_options) -> CheegerCheck:
    """Compare the optimized lambda_p with h^p / p^p."""
    rep = cheeger_constant(s)
    gap = spectral_gap(s, p, **gap_options)
    holds = gap.value >= rep.h**p / p**p - tol
    return CheegerCheck(rep.h, gap.value, bool(holds), rep.witness, gap.witness)


def cheeger_report(s: DiscreteMMS, ps=(1.5, 2.0, 3.0), tol: float = 1e-9, **gap_options) -> CheegerReport:
    rep = cheeger_constant(s)
    lam, ok = {}, {}
    for p in ps:
        est = spectral_gap(s, p, **gap_options).value
        lam[p] = est
        ok[p] = bool(est >= rep.h**p / p**p - tol)
    return CheegerReport(rep.h, rep.witness, lam, ok)


@dataclass(frozen=True)
class BuserData:
    h: float
    lambda_p_estimate: float
    ratio: float


def buser_data(s: DiscreteMMS, p: float, **gap_options) -> BuserData:
    """(h, lambda_p, lambda_p / (h + h^p)) for external study; nothing is asserted."""
    h = cheeger_constant(s).h
    lam = spectral_gap(s, p, **gap_options).value
    return BuserData(h, lam, lam / (h + h**p) if h > 0 else math.inf)


# -- test graphs ---------------------------------------------------------------------

def coarea_compatible(s: DiscreteMMS, rtol: float = 1e-12) -> bool:
    """Whether sum_j w_ij d_ij <= 2 mu_i at every vertex.

    Under this condition the cut-weight coarea integral of any f is at most
    sum_i mu_i lip(f)_i, the discrete counterpart of the coarea inequality.
    """
    d = np.where(s.inverse_lengths > 0, 1.0 / np.where(s.inverse_lengths > 0, s.inverse_lengths, 1.0), 0.0)
    load = (s.weight_matrix * d).sum(axis=1)
    return bool(np.all(load <= 2 * s.measures * (1 + rtol)))


def random_mms(rng: np.random.Generator, size: int, density: float = 0.5,
               compatible: bool = True) -> DiscreteMMS:
    """Random connected graph: spanning tree plus random extra edges.

    With ``compatible`` the weights are scaled down uniformly until
    :func:`coarea_compatible` holds.
    """
    if size < 2:
        raise ValueError("need at least two vertices")
    mu = rng.uniform(0.5, 2.0, size)
    pairs = {(int(rng.integers(0, k)), k) for k in range(1, size)}
    for i in range(size):
        for j in range(i + 1, size):
            if rng.random() < density:
                pairs.add((i, j))
    pairs = sorted(pairs)
    d = rng.uniform(0.5, 2.0, len(pairs))
    w = rng.uniform(0.2, 2.0, len(pairs))
    edges = np.array([(i, j, dd, ww) for (i, j), dd, ww in zip(pairs, d, w)])
    if compatible:
        load = np.zeros(size)
        np.add.at(load, edges[:, 0].astype(int), d * w)
        np.add.at(load, edges[:, 1].astype(int), d * w)
        edges[:, 3] *= min(1.0, float(np.min(2 * mu / load)))
    return DiscreteMMS(mu, edges, f"random({size})")
