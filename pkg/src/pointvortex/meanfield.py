"""Finite-N mean-field occupations and their continuum scaling.

Occupation numbers solve the self-consistency

    n_i = exp(-alpha) exp(-beta (lam^2 sum_{j != i} n_j log|x_i^0 - x_j^0|
                                  + lam^2 S(n_i)))
    S(n) = n (n - 1) / 4 L'(n) + (2 n^2 - 1) / 4 L(n),   L(n) = 1/2 log(h^2 / n)

with ``alpha`` fixed by ``sum n_i = N``.  Sign conventions are kept exactly as
in these equations, so ``log xi`` falls linearly in the potential with slope
``-beta``.  Under the canonical weight ``exp(-beta H)`` used by the sampler,
clustering corresponds to the opposite sign of ``beta`` here.

Studies are parameterized by the scaled inverse temperature
``beta_scaled = beta * lam^2 * N`` with ``lam = 1 / N``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .exceptions import ConvergenceError, ValidationError
from .geometry import CoarseGrid, Domain
from .hamiltonian import mean_value_constant, mean_value_constant_derivative
from .sampler import DEFAULT_BETA_MIN_SCALED, check_admissible


def raw_beta(beta_scaled: float, N: int, lam: float | None = None) -> float:
    lam = 1.0 / N if lam is None else lam
    return beta_scaled / (lam * lam * N)


def self_energy_bracket(n, h: float):
    """``S(n) = n(n-1)/4 L'(n) + (2n^2 - 1)/4 L(n)``."""
    n = np.asarray(n, dtype=float)
    return n * (n - 1) / 4 * mean_value_constant_derivative(n) + (2 * n * n - 1) / 4 * mean_value_constant(n, h)


def stationarity_bracket(n, h: float):
    """Three-term self-energy derivative as it appears in the stationarity condition."""
    n = np.asarray(n, dtype=float)
    L = mean_value_constant(n, h)
    return n * (n - 1) / 4 * mean_value_constant_derivative(n) + (2 * n - 1) / 4 * L + n * (n - 1) / 2 * L


def box_potential(n: np.ndarray, grid: CoarseGrid, lam: float) -> np.ndarray:
    """Per-box mean-field energy ``lam^2 (sum_{j != i} n_j G_ij + S(n_i))``."""
    return lam * lam * (grid.log_distance_matrix @ n + self_energy_bracket(n, grid.h))


@dataclass(frozen=True, eq=False)
class OccupationSolution:
    occupations: np.ndarray
    alpha: float
    beta: float
    lam: float
    N: int
    residual: float
    iterations: int
    grid: CoarseGrid = field(repr=False)
    trace: tuple = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "M": self.grid.M,
            "nx": self.grid.nx,
            "ny": self.grid.ny,
            "side": self.grid.domain.side,
            "beta": self.beta,
            "lambda": self.lam,
            "alpha": self.alpha,
            "residual": self.residual,
            "iterations": self.iterations,
            "occupations": self.occupations.tolist(),
        }


def occupation_fixed_point(
    grid: CoarseGrid,
    N: int,
    beta: float,
    lam: float | None = None,
    tol: float = 1e-12,
    max_iter: int = 10_000,
    damping: float = 0.5,
    n_floor: float = 1e-12,
    beta_min_scaled: float = DEFAULT_BETA_MIN_SCALED,
    initial=None,
) -> OccupationSolution:
    """Damped fixed-point iteration for the box occupations.

    Each sweep evaluates the right-hand side at the current occupations,
    fixes ``alpha`` in closed form so the update sums to ``N`` (the exact
    root of the one-dimensional normalization equation), and mixes
    ``n <- (1 - g) n + g update``.  ``g`` halves whenever the defect fails
    to shrink or the step reverses direction, down to 1/64.  The defect is
    ``max_i |log update_i - log n_i|``, which is ``|beta|`` times the
    stationarity residual.  ``n_floor`` is relative to N.
    ``initial`` (rescaled to sum to N) replaces the uniform starting point,
    which is itself a fixed point whenever the boxes are equivalent.
    """
    lam = 1.0 / N if lam is None else lam
    check_admissible(beta, lam, N, beta_min_scaled)
    floor = n_floor * N
    if initial is None:
        n = np.full(grid.M, N / grid.M)
    else:
        n = np.asarray(initial, dtype=float)
        if n.shape != (grid.M,) or np.any(n <= 0) or not np.all(np.isfinite(n)):
            raise ValidationError(f"initial occupations must be {grid.M} positive finite numbers")
        n = n * (N / n.sum())
    gamma = damping
    trace = []
    prev = math.inf
    prev_step = None
    for it in range(1, max_iter + 1):
        logw = -beta * box_potential(n, grid, lam)
        alpha = float(logsumexp(logw) - math.log(N))
        log_update = logw - alpha
        defect = float(np.max(np.abs(log_update - np.log(n))))
        trace.append(defect)
        if defect <= tol:
            return OccupationSolution(n, alpha, beta, lam, N, defect, it, grid, tuple(trace))
        step = np.exp(log_update) - n
        if defect >= prev or (prev_step is not None and np.dot(step, prev_step) < 0):
            gamma = max(gamma / 2, 1 / 64)
        prev, prev_step = defect, step
        n = np.maximum(n + gamma * step, floor)
        n *= N / n.sum()
    raise ConvergenceError(f"occupation fixed point not converged after {max_iter} sweeps (defect {defect:.3e})", trace)


def stationarity_residual(sol: OccupationSolution) -> float:
    """Max-norm of the stationarity condition at the solution.

    Evaluates ``(1/beta)(log n_i + 1) + lam^2 sum_{j != i} n_j G_ij
    + lam^2 [three-term bracket] + alpha'`` with ``alpha' = (alpha - 1)/beta``,
    i.e. the multiplier convention in which the ``+1`` is explicit.  At
    ``beta = 0`` the condition is multiplied through by ``beta``.
    """
    g, n, lam, beta = sol.grid, sol.occupations, sol.lam, sol.beta
    inter = lam * lam * (g.log_distance_matrix @ n + stationarity_bracket(n, g.h))
    if beta == 0:
        return float(np.max(np.abs(np.log(n) + sol.alpha)))
    r = (np.log(n) + 1) / beta + inter + (sol.alpha - 1) / beta
    return float(np.max(np.abs(r)))


@dataclass(frozen=True)
class ScalingLimits:
    xi: np.ndarray  # density per unit area, n_i / (N h^2)
    d: float
    E0: np.ndarray
    E1: np.ndarray


def scaling_limits(sol: OccupationSolution) -> ScalingLimits:
    g, n, N = sol.grid, sol.occupations, sol.N
    return ScalingLimits(
        xi=n / (N * g.box_area),
        d=math.exp(-sol.alpha) / (N * g.box_area),
        E0=(g.log_distance_matrix @ n) / N**2,
        E1=self_energy_bracket(n, g.h) / N**2,
    )


def self_energy_bound(sol: OccupationSolution) -> np.ndarray:
    """Per-box bound ``1/(2N) + (n_i/N)(1/2 log N - 1/2 log A)``."""
    N, A = sol.N, sol.grid.domain.area
    return 1 / (2 * N) + sol.occupations / N * (0.5 * math.log(N) - 0.5 * math.log(A))


@dataclass(frozen=True)
class DecayRow:
    N: int
    M: int
    max_abs_E1: float
    bound: float  # per-box bound at the box attaining max |E1|
    bound_holds: bool  # |E1_i| <= bound_i in every box
    first_term_max: float  # max_i n_i^2 |L'(n_i)| / N^2, at most 1/(2N)
    iterations: int


def _default_m_rule(N):
    return N


def self_energy_decay_study(N_list, beta_scaled: float, M_rule=_default_m_rule, domain: Domain | None = None, **solver_kw):
    """Self-energy magnitude against its analytic bound for growing N."""
    domain = domain or Domain()
    rows = []
    for N in N_list:
        grid = CoarseGrid.with_box_count(domain, M_rule(N))
        sol = occupation_fixed_point(grid, N, raw_beta(beta_scaled, N), **solver_kw)
        E1 = np.abs(scaling_limits(sol).E1)
        bound = self_energy_bound(sol)
        k = int(np.argmax(E1))
        n = sol.occupations
        first = n * n * np.abs(mean_value_constant_derivative(n)) / N**2
        rows.append(DecayRow(N, grid.M, float(E1[k]), float(bound[k]), bool(np.all(E1 <= bound)), float(first.max()), sol.iterations))
    return rows


def is_strictly_decreasing(values) -> bool:
    v = list(values)
    return all(b < a for a, b in zip(v, v[1:]))


@dataclass(frozen=True)
class ConvergenceRow:
    N: int
    M: int
    l1_distance: float


def box_masses(xi: np.ndarray, grid: CoarseGrid) -> np.ndarray:
    """Integrate a cell-centred ``(P, P)`` density over each box, row-major box order."""
    P = xi.shape[0]
    if P % grid.nx or P % grid.ny:
        raise ValueError(f"mesh {P} is not divisible by the {grid.nx}x{grid.ny} box grid")
    cell = (grid.domain.side / P) ** 2
    blocks = xi.reshape(grid.ny, P // grid.ny, grid.nx, P // grid.nx)
    return (blocks.sum(axis=(1, 3)) * cell).ravel()


def finite_vs_continuum(N_list, beta_scaled: float, mesh_resolution: int | None = None, M_rule=_default_m_rule, domain: Domain | None = None, continuum_kw=None, **solver_kw):
    """L1 distance between finite-N box masses ``n_i / N`` and the continuum limit.

    The continuum density (no self-energy term) is solved once on a mesh that
    every box grid divides, then integrated over each box.
    """
    from .continuum import solve_continuum

    domain = domain or Domain()
    grids = [CoarseGrid.with_box_count(domain, M_rule(N)) for N in N_list]
    if mesh_resolution is None:
        base = math.lcm(*(g.nx for g in grids), *(g.ny for g in grids))
        mesh_resolution = base * max(1, math.ceil(64 / base))
    mf = solve_continuum(beta_scaled, mesh_resolution, side=domain.side, **(continuum_kw or {}))
    rows = []
    for N, grid in zip(N_list, grids):
        sol = occupation_fixed_point(grid, N, raw_beta(beta_scaled, N), **solver_kw)
        dist = float(np.abs(sol.occupations / N - box_masses(mf.xi, grid)).sum())
        rows.append(ConvergenceRow(N, grid.M, dist))
    return rows
