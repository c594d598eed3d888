"""Seeded constructors shared by the test modules."""

import numpy as np

from mtlab.discrete import DiscreteFunction, DiscreteMMS
from mtlab.radial import radial_profile
from mtlab.rearrange import RadialFunction


def random_radial(rng, space, monotone=False, nodes=None, support=None):
    """Piecewise-linear nonnegative function vanishing at its support radius."""
    k = int(rng.integers(3, 9)) if nodes is None else nodes
    R = float(rng.uniform(0.3, 3.0)) if support is None else support
    radii = np.concatenate([[0.0], np.sort(rng.uniform(0.0, R, k - 2)), [R]])
    radii = np.unique(radii)
    vals = rng.uniform(0.0, 2.0, radii.size)
    if monotone:
        vals = np.sort(vals)[::-1]
    vals[-1] = 0.0
    return RadialFunction(space, radii, vals)


def dominated_complete_graph(target, size=8, mu=1.0):
    """K_size whose cut profile dominates ``target`` and whose edges are short.

    Weights w = 2 phi(M) / (size - 1) make every cut at least phi(M) >= phi(t);
    lengths d = mu / (2 phi(M)) keep the lifted rearrangement's energy below
    the Cheeger energy, including for the median split.
    """
    M = size * mu
    phi = float(radial_profile(target, M))
    w = 2 * phi / (size - 1)
    d = mu / (2 * phi)
    edges = [(i, j, d, w) for i in range(size) for j in range(i + 1, size)]
    return DiscreteMMS(np.full(size, mu), np.array(edges), f"K{size}")


def random_graph_function(rng, graph, signed=False):
    vals = rng.uniform(-1.0 if signed else 0.0, 1.0, graph.size)
    if not signed:
        vals -= vals.min()
    return DiscreteFunction(graph, vals)
