"""Small numerical helpers used by several modules."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GL_ORDER = 8
_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)
# nodes/weights mapped to [0, 1]
GL_NODES = 0.5 * (_GL_X + 1.0)
GL_WEIGHTS = 0.5 * _GL_W


def gauss_panels(a, b, order: int = GL_ORDER):
    """Return (nodes, weights) of Gauss-Legendre rules on each panel [a_i, b_i].

    Output arrays have shape ``(len(a), order)``.
    """
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    if order == GL_ORDER:
        x, w = GL_NODES, GL_WEIGHTS
    else:
        x, w = np.polynomial.legendre.leggauss(order)
        x, w = 0.5 * (x + 1.0), 0.5 * w
    h = b - a
    return a + h * x, h * w


def window_size(count: int, fraction: float, minimum: int = 3) -> int:
    """Number of samples in the smallest-``fraction`` window of ``count`` samples."""
    k = int(np.ceil(fraction * count))
    return max(min(count, minimum), min(count, k))


def loglog_slope(x, y) -> float:
    """Least-squares slope of log(y) against log(x)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.any(y <= 0):
        return float("nan")
    lx = np.log(x)
    if np.ptp(lx) == 0:
        return float("nan")
    return float(np.polyfit(lx, np.log(y), 1)[0])


@dataclass(frozen=True)
class Estimate:
    """A limit estimated from finite samples, with the window it came from.

    ``window`` is the largest abscissa (radius or volume) used; ``reliable``
    is False when the samples in the window have not settled.
    """

    value: float
    window: float
    reliable: bool
    spread: float = 0.0

    def __float__(self) -> float:
        return float(self.value)
