"""Pair energies of the planar point-vortex gas.

Energies follow ``H = -1/2 sum_{i != j} lam^2 log|x_i - x_j|``; each unordered
pair therefore contributes ``-lam^2 log r`` once.  Long pair sums are reduced
row by row with :func:`math.fsum` so the result does not depend on summation
order.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .exceptions import SingularConfigurationError
from .geometry import CoarseGrid, Macrostate, VortexConfiguration, assign_boxes

SINGULAR_DISTANCE = 1e-12  # relative to domain side


@dataclass(frozen=True)
class EnergyBreakdown:
    full: float
    coarse: float
    remainder: float
    intra_box: float
    inter_box_correction: float

    @property
    def first_order_remainder(self) -> float:
        """Truncated remainder: intra-box energy plus the O(h) inter-box term."""
        return self.intra_box + self.inter_box_correction

    def to_dict(self) -> dict:
        return asdict(self)


def _pair_rows(points: np.ndarray, min_dist: float):
    """Yield ``(i, distances to j > i)`` for each row of the upper triangle."""
    for i in range(points.shape[0] - 1):
        d = np.hypot(points[i + 1 :, 0] - points[i, 0], points[i + 1 :, 1] - points[i, 1])
        if d.size and d.min() < min_dist:
            j = i + 1 + int(np.argmin(d))
            raise SingularConfigurationError(
                f"vortices {i} and {j} are {d.min():.3e} apart (below {min_dist:.1e})"
            )
        yield i, d


def full_energy(config: VortexConfiguration) -> float:
    """Exact N-body energy.  Returns 0 for a single vortex."""
    min_dist = SINGULAR_DISTANCE * config.domain.side
    rows = [math.fsum(np.log(d)) for _, d in _pair_rows(config.positions, min_dist)]
    return -(config.lam**2) * math.fsum(rows)


def coarse_energy(s: Macrostate, grid: CoarseGrid, lam: float) -> float:
    """Energy with every vortex moved to its box center, intra-box pairs dropped."""
    n = s.as_array().astype(float)
    if n.size != grid.M:
        raise ValueError(f"macrostate has {n.size} boxes, grid has {grid.M}")
    terms = np.outer(n, n) * grid.log_distance_matrix
    return -0.5 * lam**2 * math.fsum(terms.ravel())


def coarse_energy_batch(states: np.ndarray, grid: CoarseGrid, lam: float) -> np.ndarray:
    """Vectorized :func:`coarse_energy` over rows of a ``(K, M)`` occupation array."""
    n = np.asarray(states, dtype=float)
    return -0.5 * lam**2 * np.einsum("ki,ij,kj->k", n, grid.log_distance_matrix, n)


def remainder_energy(config: VortexConfiguration, grid: CoarseGrid) -> EnergyBreakdown:
    s = assign_boxes(config, grid)
    box = grid.box_index(config.positions)
    offsets = config.positions - grid.centers[box]
    lam2 = config.lam**2
    min_dist = SINGULAR_DISTANCE * config.domain.side

    full_rows, intra_rows, corr_rows = [], [], []
    for i, d in _pair_rows(config.positions, min_dist):
        logs = np.log(d)
        full_rows.append(math.fsum(logs))
        same = box[i + 1 :] == box[i]
        intra_rows.append(math.fsum(logs[same]))
        other = ~same
        if np.any(other):
            rel = np.hypot(offsets[i + 1 :, 0][other] - offsets[i, 0], offsets[i + 1 :, 1][other] - offsets[i, 1])
            c = grid.centers[box[i + 1 :][other]] - grid.centers[box[i]]
            corr_rows.append(math.fsum(rel / np.hypot(c[:, 0], c[:, 1])))

    full = -lam2 * math.fsum(full_rows)
    coarse = coarse_energy(s, grid, config.lam)
    return EnergyBreakdown(
        full=full,
        coarse=coarse,
        remainder=full - coarse,
        intra_box=-lam2 * math.fsum(intra_rows),
        inter_box_correction=-lam2 * math.fsum(corr_rows),
    )


def mean_value_constant(n, h: float):
    """Intra-box mean log separation ``L(n) = 1/2 log(h^2 / n)``."""
    return 0.5 * np.log(h * h / np.asarray(n, dtype=float))


def mean_value_constant_derivative(n):
    """``dL/dn = -1 / (2 n)``."""
    return -0.5 / np.asarray(n, dtype=float)


def intra_box_self_energy(s: Macrostate, grid: CoarseGrid, lam: float) -> float:
    """Mean-value replacement of the intra-box double sum.

    Returns ``sum_i lam^2 n_i (n_i - 1) / 2 * L(n_i)``, the stand-in for
    ``sum_i sum_{j != k in box i} lam^2 log|x_j' - x_k'|``.  The intra-box
    *energy* carries the extra ``-1/2``, which is why the free energy gains
    ``-1/4 sum_i lam^2 n_i (n_i - 1) L(n_i)``.
    """
    n = s.as_array()
    occ = n[n >= 2].astype(float)
    if occ.size == 0:
        return 0.0
    return math.fsum(lam**2 * occ * (occ - 1) / 2 * mean_value_constant(occ, grid.h))


def self_energy_batch(states: np.ndarray, h: float, lam: float) -> np.ndarray:
    """``-1/4 sum_i lam^2 n_i (n_i - 1) L(n_i)`` for each row of ``states``."""
    n = np.asarray(states, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(n >= 2, n * (n - 1) * mean_value_constant(np.maximum(n, 1), h), 0.0)
    return -0.25 * lam**2 * t.sum(axis=1)
