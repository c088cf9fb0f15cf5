"""Independent reference computations shared by tests."""

import math

import numpy as np
from scipy.optimize import brentq

from pointvortex.meanfield import box_potential


def two_box_roots(grid, N, beta, lam, samples=4001):
    """Every root of the two-box balance ``log(n1/n2) + beta (V1 - V2) = 0``.

    Sign changes on a fine grid of ``n1`` are refined by bisection.
    """
    if grid.M != 2:
        raise ValueError("two-box oracle needs M = 2")

    def g(n1):
        n = np.array([n1, N - n1])
        V = box_potential(n, grid, lam)
        return math.log(n1) - math.log(N - n1) + beta * (V[0] - V[1])

    xs = np.linspace(1e-9 * N, N * (1 - 1e-9), samples)
    vals = np.array([g(x) for x in xs])
    roots = [float(x) for x, v in zip(xs, vals) if v == 0.0]
    for i in np.flatnonzero(vals[:-1] * vals[1:] < 0):
        roots.append(brentq(g, xs[i], xs[i + 1], xtol=1e-14, rtol=1e-15))
    return sorted(roots), vals
