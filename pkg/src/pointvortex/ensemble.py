"""Exact macrostate ensemble of the coarse-grained Hamiltonian.

A macrostate is an occupation vector ``s = (n_1..n_M)`` with ``sum n_i = N``.
Its statistical weight under the coarse Hamiltonian is

    W(s) h^{2N} exp(-beta H0(s)),   W(s) = N! / prod n_i!

All sums over macrostates are done in log space.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np
from scipy.special import comb, gammaln, logsumexp

from .exceptions import EnumerationTooLargeError, NormalizationError, UndefinedFreeEnergyError, ValidationError
from .geometry import CoarseGrid, Macrostate
from .hamiltonian import coarse_energy_batch, self_energy_batch

ENUMERATION_CAP = 10**7


def degeneracy_log(s: Macrostate) -> float:
    """``log W(s) = log N! - sum log n_i!``."""
    n = s.as_array()
    return float(gammaln(s.N + 1) - gammaln(n + 1).sum())


def count_macrostates(N: int, M: int) -> int:
    return int(comb(N + M - 1, M - 1, exact=True))


def _check_size(N, M, cap):
    if N < 0 or M < 1:
        raise ValidationError(f"need N >= 0 and M >= 1, got N={N}, M={M}")
    K = count_macrostates(N, M)
    if K > cap:
        raise EnumerationTooLargeError(f"{K} macrostates for N={N}, M={M} exceeds the cap {cap}")
    return K


@lru_cache(maxsize=64)
def _compositions(N: int, M: int) -> np.ndarray:
    if M == 1:
        return np.array([[N]], dtype=np.int64)
    blocks = []
    for first in range(N, -1, -1):
        rest = _compositions(N - first, M - 1)
        blocks.append(np.column_stack([np.full(len(rest), first, dtype=np.int64), rest]))
    out = np.vstack(blocks)
    out.setflags(write=False)
    return out


def macrostate_array(N: int, M: int, cap: int = ENUMERATION_CAP) -> np.ndarray:
    """All compositions of ``N`` into ``M`` parts, shape ``(K, M)``.

    Rows are in lexicographic order with the first box filled first:
    ``(2,0), (1,1), (0,2)`` for ``N = M = 2``.
    """
    _check_size(N, M, cap)
    return _compositions(N, M)


def enumerate_macrostates(N: int, M: int, cap: int = ENUMERATION_CAP) -> Iterator[Macrostate]:
    for row in macrostate_array(N, M, cap):
        yield Macrostate(tuple(row.tolist()))


@dataclass(frozen=True)
class MacrostateWeight:
    log_W: float
    log_boltzmann: float
    log_volume: float
    log_weight: float


def macrostate_weight(s: Macrostate, grid: CoarseGrid, beta: float, lam: float) -> MacrostateWeight:
    log_W = degeneracy_log(s)
    log_b = float(-beta * coarse_energy_batch(s.as_array()[None, :], grid, lam)[0])
    log_v = 2 * s.N * math.log(grid.h)
    return MacrostateWeight(log_W, log_b, log_v, log_W + log_b + log_v)


class Ensemble:
    """Every macrostate of ``N`` vortices on ``grid`` with its exact weight."""

    def __init__(self, N: int, grid: CoarseGrid, beta: float, lam: float = 1.0, cap: int = ENUMERATION_CAP):
        self.N, self.grid, self.beta, self.lam = N, grid, beta, lam
        self.states = macrostate_array(N, grid.M, cap)
        self.log_W = gammaln(N + 1) - gammaln(self.states + 1).sum(axis=1)
        self.H0 = coarse_energy_batch(self.states, grid, lam)
        self.log_volume = 2 * N * math.log(grid.h)
        self.log_weight = self.log_W + self.log_volume - beta * self.H0
        self.log_Z = float(logsumexp(self.log_weight))
        self.P = np.exp(self.log_weight - self.log_Z)

    def index_of(self, s: Macrostate) -> int:
        if s.M != self.grid.M or s.N != self.N:
            raise ValidationError(f"{s} is not a macrostate of N={self.N}, M={self.grid.M}")
        hit = np.flatnonzero(np.all(self.states == s.as_array(), axis=1))
        if hit.size != 1:
            raise ValidationError(f"{s} is not a macrostate of N={self.N}, M={self.grid.M}")
        return int(hit[0])

    def mode(self) -> int:
        # argmax returns the first maximizer, i.e. lexicographic tie-break
        return int(np.argmax(self.log_weight))

    def average(self, values) -> float:
        return float(np.dot(self.P, values))


def partition_function_log(N: int, grid: CoarseGrid, beta: float, lam: float = 1.0) -> float:
    """``log Z0 = log sum_s W(s) h^{2N} exp(-beta H0(s))``."""
    return Ensemble(N, grid, beta, lam).log_Z


def macrostate_probability(s: Macrostate, grid: CoarseGrid, beta: float, lam: float = 1.0) -> float:
    ens = Ensemble(s.N, grid, beta, lam)
    return float(ens.P[ens.index_of(s)])


def gibbs_entropy(P, atol: float = 1e-10) -> float:
    """``-sum P log P`` with ``0 log 0 = 0`` (k_B = 1)."""
    p = np.asarray(P, dtype=float)
    if np.any(p < 0) or abs(p.sum() - 1.0) > atol:
        raise NormalizationError(f"distribution sums to {p.sum():.15g}, not 1")
    nz = p[p > 0]
    return float(-np.dot(nz, np.log(nz)))


def landau_concentration(N: int, grid: CoarseGrid, beta: float, lam: float = 1.0):
    """Most probable macrostate and its probability."""
    ens = Ensemble(N, grid, beta, lam)
    k = ens.mode()
    return Macrostate(tuple(ens.states[k].tolist())), float(ens.P[k])


def neighbourhood_mass(ens: Ensemble, center: Macrostate, radius: float) -> float:
    """Probability of macrostates within max-norm ``radius`` of ``center``."""
    d = np.abs(ens.states - center.as_array()).max(axis=1)
    return float(ens.P[d <= radius].sum())


def box_mean_separation(hx: float, hy: float) -> float:
    """Mean distance between two independent uniform points in an ``hx`` by ``hy`` box."""
    a, b = hx, hy
    d = math.hypot(a, b)
    return (
        a**3 / b**2
        + b**3 / a**2
        + d * (3 - a**2 / b**2 - b**2 / a**2)
        + 2.5 * (b**2 / a * math.log((a + d) / b) + a**2 / b * math.log((b + d) / a))
    ) / 15


def order_h_term(ens: Ensemble) -> float:
    """Average of the first-order inter-box remainder under the coarse measure.

    Vortices are uniform inside their boxes under ``<.>_0``, so each
    inter-box pair contributes ``-lam^2 E|x_j' - x_k'| / |x_i^0 - x_i'^0|``.
    """
    grid = ens.grid
    inv = np.exp(-grid.log_distance_matrix)
    np.fill_diagonal(inv, 0.0)
    n = ens.states.astype(float)
    pair_sum = 0.5 * np.einsum("ki,ij,kj->k", n, inv, n)
    return -(ens.lam**2) * box_mean_separation(grid.hx, grid.hy) * ens.average(pair_sum)


@dataclass(frozen=True)
class FreeEnergyReport:
    beta: float
    N: int
    M: int
    lam: float
    mode: str
    F0: float
    F_var: float
    F_var_gibbs: float
    self_energy_average: float
    order_h_term: float
    F_exact: float | None = None
    tolerance: float | None = None
    bound_satisfied: bool | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def f_var(
    N: int,
    grid: CoarseGrid,
    beta: float,
    lam: float = 1.0,
    mode: str = "full",
    F_exact: float | None = None,
    exact_rtol: float = 5e-3,
) -> FreeEnergyReport:
    """Variational free energy ``F0 + <H1>_0`` and its Gibbs-entropy twin.

    ``<H1>_0`` keeps the intra-box self energy,
    ``-1/4 sum_i lam^2 n_i (n_i - 1) L(n_i)`` per macrostate, and drops the
    O(h) inter-box remainder, whose size is reported as ``order_h_term``.

    mode="full" averages the self energy over the macrostate distribution;
    mode="landau" evaluates everything at the most probable macrostate.

    ``F_var_gibbs`` is computed independently as ``<H0 + H1>_0 - T S``, where
    ``S`` is the Gibbs entropy of the macrostate distribution plus the
    within-macrostate phase-space entropy ``<log(W h^{2N})>_0``.

    With ``F_exact`` given, the bound direction is checked
    (``F <= F_var`` for beta > 0, ``F >= F_var`` for beta < 0) within
    ``exact_rtol * |F_exact| + |order_h_term|``.
    """
    if beta == 0:
        raise UndefinedFreeEnergyError("free energy -log(Z)/beta is undefined at beta = 0")
    if mode not in ("full", "landau"):
        raise ValidationError(f"mode must be 'full' or 'landau', got {mode!r}")
    ens = Ensemble(N, grid, beta, lam)
    self_e = self_energy_batch(ens.states, grid.h, lam)
    F0 = -ens.log_Z / beta

    if mode == "full":
        F_var = F0 + ens.average(self_e)
    else:
        k = ens.mode()
        F_var = -ens.log_weight[k] / beta + self_e[k]

    entropy = gibbs_entropy(ens.P) + ens.average(ens.log_W + ens.log_volume)
    F_gibbs = ens.average(ens.H0) + ens.average(self_e) - entropy / beta

    oh = order_h_term(ens)
    tol = ok = None
    if F_exact is not None:
        tol = exact_rtol * abs(F_exact) + abs(oh)
        ok = bool(F_exact <= F_var + tol) if beta > 0 else bool(F_exact >= F_var - tol)
    return FreeEnergyReport(
        beta=beta, N=N, M=grid.M, lam=lam, mode=mode,
        F0=F0, F_var=float(F_var), F_var_gibbs=float(F_gibbs),
        self_energy_average=ens.average(self_e), order_h_term=oh,
        F_exact=F_exact, tolerance=tol, bound_satisfied=ok,
    )


def remainder_average_mc(N: int, grid: CoarseGrid, beta: float, lam: float, n_samples: int, seed: int):
    """Monte Carlo estimate of the exact ``<H - H0>_0`` (diagnostic).

    Draws macrostates from the coarse distribution and places vortices
    uniformly in their boxes.  Returns ``(mean, standard error)``.
    """
    from .geometry import VortexConfiguration
    from .hamiltonian import remainder_energy

    ens = Ensemble(N, grid, beta, lam)
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(ens.states), size=n_samples, p=ens.P)
    vals = np.empty(n_samples)
    for t, k in enumerate(picks):
        boxes = np.repeat(np.arange(grid.M), ens.states[k])
        jitter = (rng.random((N, 2)) - 0.5) * [grid.hx, grid.hy]
        cfg = VortexConfiguration(grid.centers[boxes] + jitter, lam, grid.domain)
        vals[t] = remainder_energy(cfg, grid).remainder
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_samples))
