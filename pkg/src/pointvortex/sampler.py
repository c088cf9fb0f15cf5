"""Metropolis sampling of the canonical point-vortex ensemble.

The target density is ``exp(-beta H(x))`` on the confined square.  Each step
moves one uniformly chosen vortex by a displacement drawn uniformly from
``[-step_size, step_size]^2``; proposals that leave the domain or land within
the singular distance of another vortex are rejected.  All random numbers come
from one :class:`numpy.random.Generator` seeded by ``SamplerConfig.seed`` and
are drawn in fixed-size blocks, so a chain is a pure function of
``(initial, cfg)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numba
import numpy as np

from .exceptions import AdmissibilityError, ValidationError
from .geometry import CoarseGrid, Domain, VortexConfiguration
from .hamiltonian import SINGULAR_DISTANCE, full_energy

logger = logging.getLogger(__name__)

DEFAULT_BETA_MIN_SCALED = -4.0
_BLOCK = 1 << 16


def scaled_beta(beta: float, lam: float, N: int) -> float:
    """Mean-field inverse temperature ``beta * lam^2 * N``."""
    return beta * lam * lam * N


def check_admissible(beta: float, lam: float, N: int, beta_min_scaled: float = DEFAULT_BETA_MIN_SCALED):
    b = scaled_beta(beta, lam, N)
    if not math.isfinite(b) or b <= beta_min_scaled:
        raise AdmissibilityError(
            f"scaled inverse temperature beta*lam^2*N = {b:.6g} is not above beta_min = {beta_min_scaled:.6g}"
        )


@dataclass(frozen=True)
class SamplerConfig:
    beta: float
    steps: int
    seed: int
    step_size: float | None = None  # None: h/2 of the default 4x4 grid, i.e. side/8
    thin: int = 1
    burn_in: int = 0
    beta_min_scaled: float = DEFAULT_BETA_MIN_SCALED
    tune: bool = False  # adapt step_size during burn-in only

    def __post_init__(self):
        problems = []
        if not math.isfinite(self.beta):
            problems.append(f"beta must be finite, got {self.beta!r}")
        if int(self.steps) != self.steps or self.steps < 1:
            problems.append(f"steps must be a positive integer, got {self.steps!r}")
        if int(self.burn_in) != self.burn_in or not (0 <= self.burn_in < self.steps):
            problems.append(f"burn_in must satisfy 0 <= burn_in < steps, got {self.burn_in!r}")
        if int(self.thin) != self.thin or self.thin < 1:
            problems.append(f"thin must be >= 1, got {self.thin!r}")
        if self.step_size is not None and not (self.step_size > 0):
            problems.append(f"step_size must be positive, got {self.step_size!r}")
        if int(self.seed) != self.seed or not (0 <= self.seed < 2**64):
            problems.append(f"seed must be a 64-bit non-negative integer, got {self.seed!r}")
        if problems:
            raise ValidationError("; ".join(problems))

    def resolved_step(self, domain: Domain) -> float:
        step = domain.side / 8 if self.step_size is None else self.step_size
        if step > domain.side:
            raise ValidationError(f"step_size {step} exceeds domain side {domain.side}")
        return step

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class Chain:
    positions: np.ndarray  # (n_samples, N, 2)
    energies: np.ndarray  # (n_samples,)
    acceptance_rate: float
    beta: float
    seed: int
    lam: float
    domain: Domain
    config: SamplerConfig
    final_step_size: float = field(default=0.0)

    def __len__(self):
        return self.positions.shape[0]

    @property
    def samples(self) -> list[VortexConfiguration]:
        return [VortexConfiguration(p, self.lam, self.domain) for p in self.positions]

    def header(self) -> dict:
        return {
            "type": "header",
            "config": self.config.to_dict(),
            "N": int(self.positions.shape[1]) if len(self) else None,
            "lambda": self.lam,
            "side": self.domain.side,
            "beta": self.beta,
            "seed": self.seed,
            "n_samples": len(self),
            "acceptance_rate": self.acceptance_rate,
            "final_step_size": self.final_step_size,
        }


@numba.njit(cache=True)
def acceptance_probability(delta_e, beta):
    """Metropolis ratio ``min(1, exp(-beta * delta_e))``."""
    x = -beta * delta_e
    if x >= 0.0:
        return 1.0
    return math.exp(x)


@numba.njit(cache=True)
def _delta_energy(pos, k, nx, ny, lam2, min_dist):
    """Energy change for moving vortex ``k`` to ``(nx, ny)``; ok=False if singular."""
    s = 0.0
    floor = min_dist * min_dist
    for j in range(pos.shape[0]):
        if j == k:
            continue
        dx, dy = nx - pos[j, 0], ny - pos[j, 1]
        rn2 = dx * dx + dy * dy
        if rn2 < floor:
            return 0.0, False
        dx, dy = pos[k, 0] - pos[j, 0], pos[k, 1] - pos[j, 1]
        s += math.log(rn2 / (dx * dx + dy * dy))
    return -0.5 * lam2 * s, True


@numba.njit(cache=True)
def _energy(pos, lam2):
    s = 0.0
    n = pos.shape[0]
    for i in range(n - 1):
        for j in range(i + 1, n):
            dx, dy = pos[i, 0] - pos[j, 0], pos[i, 1] - pos[j, 1]
            s += math.log(dx * dx + dy * dy)
    return -0.5 * lam2 * s


@numba.njit(cache=True)
def _metropolis_block(pos, lam2, beta, step, side, min_dist, pick, jump, u, t0, burn_in, thin, out, out_e, n_out):
    accepted = 0
    for t in range(pick.shape[0]):
        k = pick[t]
        nx = pos[k, 0] + step * jump[t, 0]
        ny = pos[k, 1] + step * jump[t, 1]
        if 0.0 <= nx <= side and 0.0 <= ny <= side:
            de, ok = _delta_energy(pos, k, nx, ny, lam2, min_dist)
            if ok and u[t] < acceptance_probability(de, beta):
                pos[k, 0] = nx
                pos[k, 1] = ny
                accepted += 1
        g = t0 + t + 1
        if g > burn_in and (g - burn_in) % thin == 0 and n_out < out.shape[0]:
            out[n_out] = pos
            out_e[n_out] = _energy(pos, lam2)
            n_out += 1
    return accepted, n_out


def sample_canonical(initial: VortexConfiguration, cfg: SamplerConfig) -> Chain:
    """Run a Metropolis chain targeting ``exp(-beta H)`` from ``initial``."""
    N = initial.N
    check_admissible(cfg.beta, initial.lam, N, cfg.beta_min_scaled)
    full_energy(initial)  # raises on coincident vortices
    domain = initial.domain
    step = cfg.resolved_step(domain)
    lam2 = initial.lam**2
    min_dist = SINGULAR_DISTANCE * domain.side

    rng = np.random.default_rng(cfg.seed)
    pos = np.array(initial.positions, dtype=float)
    n_samples = (cfg.steps - cfg.burn_in) // cfg.thin
    out = np.empty((n_samples, N, 2))
    out_e = np.empty(n_samples)
    n_out = 0
    accepted_measured = 0

    t = 0
    while t < cfg.steps:
        # tuning changes the step only while still inside burn-in
        stop = min(cfg.steps, t + _BLOCK)
        if t < cfg.burn_in:
            stop = min(stop, cfg.burn_in, t + 500 if cfg.tune else stop)
        b = stop - t
        pick = rng.integers(0, N, size=b)
        jump = rng.uniform(-1.0, 1.0, size=(b, 2))
        u = rng.random(b)
        acc, n_out = _metropolis_block(
            pos, lam2, float(cfg.beta), step, domain.side, min_dist,
            pick, jump, u, t, cfg.burn_in, cfg.thin, out, out_e, n_out,
        )
        if t >= cfg.burn_in:
            accepted_measured += acc
        elif cfg.tune:
            rate = acc / b
            step = min(domain.side, step * (1.1 if rate > 0.5 else 1 / 1.1))
        t = stop

    measured = cfg.steps - cfg.burn_in
    out.setflags(write=False)
    out_e.setflags(write=False)
    return Chain(
        positions=out,
        energies=out_e,
        acceptance_rate=accepted_measured / measured,
        beta=cfg.beta,
        seed=cfg.seed,
        lam=initial.lam,
        domain=domain,
        config=cfg,
        final_step_size=step,
    )


@dataclass(frozen=True)
class OccupationHistogram:
    mean: np.ndarray
    std_error: np.ndarray
    table: dict | None = None  # macrostate tuple -> frequency


def occupation_histogram(chain: Chain, grid: CoarseGrid, full_table: bool = False) -> OccupationHistogram:
    """Per-box mean occupations over the chain, optionally the macrostate frequency table."""
    if len(chain) == 0:
        raise ValidationError("empty chain")
    S, N, _ = chain.positions.shape
    idx = grid.box_index(chain.positions.reshape(-1, 2)).reshape(S, N)
    counts = np.zeros((S, grid.M))
    np.add.at(counts, (np.repeat(np.arange(S), N), idx.ravel()), 1.0)
    mean = counts.mean(axis=0)
    se = counts.std(axis=0, ddof=1) / math.sqrt(S) if S > 1 else np.zeros(grid.M)
    table = None
    if full_table:
        keys, freq = np.unique(counts.astype(np.int64), axis=0, return_counts=True)
        table = {tuple(int(v) for v in k): f / S for k, f in zip(keys, freq)}
    return OccupationHistogram(mean, se, table)


def clustering_radius_series(chain: Chain) -> np.ndarray:
    """Per-sample RMS distance of the vortices from their centroid."""
    p = np.asarray(chain.positions)
    c = p.mean(axis=1, keepdims=True)
    return np.sqrt(((p - c) ** 2).sum(axis=2).mean(axis=1))


def clustering_radius(chain: Chain) -> float:
    if len(chain) == 0:
        raise ValidationError("empty chain")
    return float(clustering_radius_series(chain).mean())


def batch_means_error(series, n_batches: int = 20) -> float:
    """Standard error of the mean from non-overlapping batch means."""
    x = np.asarray(series, dtype=float)
    b = len(x) // n_batches
    if b < 1:
        raise ValidationError(f"need at least {n_batches} samples for batch means, got {len(x)}")
    means = x[: b * n_batches].reshape(n_batches, b).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(n_batches))


def discretized_transition_matrix(sites_per_side: int, beta: float, lam: float = 1.0, reach: int = 1, side: float = 1.0):
    """Exact transition kernel of the two-vortex chain on a lattice.

    Vortices live on the cell centers of a ``sites_per_side``-square lattice.
    A step picks a vortex with probability 1/2 and a lattice offset uniformly
    from ``{-reach..reach}^2``; off-lattice or coincident targets are
    rejected.  Acceptance uses the same :func:`acceptance_probability` and
    energy difference as :func:`sample_canonical`.

    Returns ``(states, P, weights)`` where ``states`` is ``(S, 2, 2)``
    positions, ``P`` the row-stochastic matrix and ``weights`` the unnormalized
    Boltzmann factors.
    """
    k = sites_per_side
    a = side / k
    sites = [(i, j) for j in range(k) for i in range(k)]
    states = [(s, t) for s in sites for t in sites if s != t]
    index = {st: n for n, st in enumerate(states)}
    coords = lambda site: ((site[0] + 0.5) * a, (site[1] + 0.5) * a)  # noqa: E731
    pos_all = np.array([[coords(s), coords(t)] for s, t in states])
    lam2 = lam * lam
    energies = np.array([_energy(p, lam2) for p in pos_all])
    weights = np.exp(-beta * (energies - energies.min()))

    offsets = [(dx, dy) for dx in range(-reach, reach + 1) for dy in range(-reach, reach + 1)]
    q = 0.5 / len(offsets)
    P = np.zeros((len(states), len(states)))
    min_dist = SINGULAR_DISTANCE * side
    for n, st in enumerate(states):
        for v in range(2):
            for dx, dy in offsets:
                tgt = (st[v][0] + dx, st[v][1] + dy)
                if not (0 <= tgt[0] < k and 0 <= tgt[1] < k) or tgt == st[1 - v]:
                    continue
                new = (tgt, st[1]) if v == 0 else (st[0], tgt)
                m = index[new]
                nx, ny = coords(tgt)
                de, ok = _delta_energy(pos_all[n], v, nx, ny, lam2, min_dist)
                if ok and m != n:
                    P[n, m] += q * acceptance_probability(de, beta)
        P[n, n] = 1.0 - P[n].sum()
    return pos_all, P, weights


def initial_uniform(N: int, seed: int, lam: float = 1.0, domain: Domain | None = None) -> VortexConfiguration:
    """Uniform random start derived from ``seed`` (independent of the chain stream)."""
    domain = domain or Domain()
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
    return VortexConfiguration(rng.random((N, 2)) * domain.side, lam, domain)

