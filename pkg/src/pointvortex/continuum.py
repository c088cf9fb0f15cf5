"""Continuum mean-field density on a uniform cell-centred mesh.

The solver works with the integral form

    xi = d exp(-beta (E0[xi] + E1)),   E0[xi](x) = int log|x - y| xi(y) dy,

which needs no boundary condition.  ``E0`` is a discrete convolution with the
point log-kernel, except that the zero-offset entry is the exact average of
``log|x|`` over one cell.  Since ``Laplacian log|x| = 2 pi delta``, the stream
function with ``Laplacian psi = xi`` is ``psi = E0 / (2 pi)`` (plus an
unspecified harmonic part, taken as zero).

Fields are ``(P, P)`` arrays indexed ``[iy, ix]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.signal import fftconvolve

from .exceptions import AdmissibilityError, ConvergenceError, ValidationError
from .geometry import Domain
from .meanfield import self_energy_bracket
from .sampler import DEFAULT_BETA_MIN_SCALED

# mean of log(x^2 + y^2) over the unit square with a corner at the origin is
# log 2 - 3 + pi/2; halve it for log r
_UNIT_SQUARE_LOG_MEAN = 0.5 * (math.log(2) - 3 + math.pi / 2)


def cell_log_average(delta: float) -> float:
    """Average of ``log|x|`` over a square of side ``delta`` centred at 0."""
    return math.log(delta / 2) + _UNIT_SQUARE_LOG_MEAN


@dataclass(frozen=True)
class Mesh:
    domain: Domain
    P: int

    def __post_init__(self):
        if int(self.P) != self.P or self.P < 2:
            raise ValidationError(f"mesh resolution must be an integer >= 2, got {self.P!r}")

    @property
    def delta(self) -> float:
        return self.domain.side / self.P

    @property
    def cell_area(self) -> float:
        return self.delta**2

    @property
    def coords(self) -> np.ndarray:
        return (np.arange(self.P) + 0.5) * self.delta

    def integrate(self, f) -> float:
        return float(np.sum(f) * self.cell_area)


@lru_cache(maxsize=16)
def _kernel(P: int, delta: float) -> np.ndarray:
    k = np.arange(-(P - 1), P)
    with np.errstate(divide="ignore"):
        K = np.log(delta * np.hypot(k[:, None], k[None, :]))
    K[P - 1, P - 1] = cell_log_average(delta)
    K.setflags(write=False)
    return K


def log_potential(xi: np.ndarray, mesh: Mesh) -> np.ndarray:
    """``E0[xi]`` at every cell centre."""
    P = mesh.P
    full = fftconvolve(xi, _kernel(P, mesh.delta), mode="full")
    return full[P - 1 : 2 * P - 1, P - 1 : 2 * P - 1] * mesh.cell_area


def log_potential_direct(xi: np.ndarray, mesh: Mesh) -> np.ndarray:
    """Same sum as :func:`log_potential`, evaluated pair by pair (slow)."""
    x = mesh.coords
    X, Y = np.meshgrid(x, x)
    px, py, w = X.ravel(), Y.ravel(), xi.ravel()
    out = np.empty_like(w)
    self_term = cell_log_average(mesh.delta)
    for i in range(w.size):
        r = np.hypot(px - px[i], py - py[i])
        r[i] = 1.0
        lg = np.log(r)
        lg[i] = self_term
        out[i] = np.dot(lg, w)
    return out.reshape(xi.shape) * mesh.cell_area


def laplacian(f: np.ndarray, delta: float) -> np.ndarray:
    """Five-point Laplacian on the ``(P-2, P-2)`` interior."""
    return (f[2:, 1:-1] + f[:-2, 1:-1] + f[1:-1, 2:] + f[1:-1, :-2] - 4 * f[1:-1, 1:-1]) / delta**2


def self_energy_field(xi: np.ndarray, N: int, area: float) -> np.ndarray:
    """Finite-N self-energy on the scale of ``E0``, with M = N boxes.

    A box of area ``A / N`` holds ``n = xi A`` vortices; the field is
    ``S(n) / N``, which vanishes like ``log N / N``.
    """
    h = math.sqrt(area / N)
    n = np.maximum(xi * area, 1e-300)
    return self_energy_bracket(n, h) / N


@dataclass(frozen=True, eq=False)
class MeanField:
    mesh: Mesh
    xi: np.ndarray
    E0: np.ndarray
    E1: np.ndarray
    psi: np.ndarray
    d: float
    beta: float
    iterations: int
    residual: float
    N_for_E1: int | None = None

    def header(self) -> dict:
        return {
            "beta": self.beta,
            "mesh": self.mesh.P,
            "side": self.mesh.domain.side,
            "d": self.d,
            "iterations": self.iterations,
            "residual": self.residual,
            "N_for_E1": self.N_for_E1,
            "mass": self.mesh.integrate(self.xi),
        }


def _check_beta(beta, beta_min_scaled):
    if not math.isfinite(beta) or beta <= beta_min_scaled:
        raise AdmissibilityError(f"beta = {beta} is not above beta_min = {beta_min_scaled}")


def _normalized_exp(expo: np.ndarray, mesh: Mesh):
    """``exp(expo) / int exp(expo)`` and ``log`` of the normalizer ``1 / int exp``."""
    m = expo.max()
    w = np.exp(expo - m)
    z = mesh.integrate(w)
    return w / z, -(m + math.log(z))


def _picard(update, x0, tol, max_iter, damping, cap, what):
    x = x0
    gamma = damping
    prev = math.inf
    trace = []
    for it in range(1, max_iter + 1):
        new = update(x)
        if not all(np.all(np.isfinite(a)) for a in new) or max(a.max() for a in new) > cap:
            raise AdmissibilityError(f"{what}: density blow-up at iteration {it} (max exceeds {cap:.3g})")
        res = max(float(np.max(np.abs(a - b))) for a, b in zip(new, x))
        trace.append(res)
        if res <= tol:
            return new, it, res
        if res > prev:
            gamma = max(gamma / 2, 1 / 64)
        prev = res
        x = tuple((1 - gamma) * b + gamma * a for a, b in zip(new, x))
    raise ConvergenceError(f"{what}: not converged after {max_iter} iterations (residual {res:.3e})", trace)


def solve_continuum(
    beta: float,
    mesh_resolution: int,
    tol: float = 1e-11,
    max_iter: int = 5000,
    include_E1: bool = False,
    N_for_E1: int | None = None,
    side: float = 1.0,
    damping: float = 0.5,
    density_cap: float = 1e6,
    beta_min_scaled: float = DEFAULT_BETA_MIN_SCALED,
) -> MeanField:
    """Damped Picard iteration ``xi <- normalize(exp(-beta (E0[xi] + E1)))``.

    ``beta`` is the scaled inverse temperature.  With ``include_E1`` the
    finite-N self-energy field for ``N_for_E1`` vortices is added.
    ``tol`` and ``density_cap`` are in units of the uniform density ``1/A``.
    """
    if mesh_resolution < 16:
        raise ValidationError(f"mesh_resolution must be >= 16, got {mesh_resolution}")
    if include_E1 and (N_for_E1 is None or N_for_E1 < 2):
        raise ValidationError("include_E1 requires N_for_E1 >= 2")
    _check_beta(beta, beta_min_scaled)
    mesh = Mesh(Domain(side), mesh_resolution)
    A = mesh.domain.area
    zero = np.zeros((mesh.P, mesh.P))

    def energy(xi):
        E0 = log_potential(xi, mesh)
        E1 = self_energy_field(xi, N_for_E1, A) if include_E1 else zero
        return E0, E1

    def update(state):
        E0, E1 = energy(state[0] / A)
        return (_normalized_exp(-beta * (E0 + E1), mesh)[0] * A,)

    (xi_s,), it, res = _picard(update, (np.ones((mesh.P, mesh.P)),), tol, max_iter, damping, density_cap, "continuum solve")
    xi = xi_s / A
    E0, E1 = energy(xi)
    _, log_d = _normalized_exp(-beta * (E0 + E1), mesh)
    return MeanField(mesh, xi, E0, E1, E0 / (2 * math.pi), math.exp(log_d), beta, it, res, N_for_E1 if include_E1 else None)


def interior_mask(mesh: Mesh, margin: float) -> np.ndarray:
    """Cells of the Laplacian interior whose centres are ``margin * side`` from the edge."""
    x = mesh.coords[1:-1]
    keep = (x >= margin * mesh.domain.side) & (x <= (1 - margin) * mesh.domain.side)
    return keep[:, None] & keep[None, :]


def poisson_residual(mf: MeanField, margin: float = 0.25) -> float:
    """``max |Laplacian E0 - 2 pi xi|`` away from the boundary."""
    r = laplacian(mf.E0, mf.mesh.delta) - 2 * math.pi * mf.xi[1:-1, 1:-1]
    return float(np.max(np.abs(r[interior_mask(mf.mesh, margin)])))


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float


def linear_fit(x, y) -> LinearFit:
    x, y = np.ravel(x), np.ravel(y)
    slope, intercept = np.polyfit(x, y, 1)
    ss_res = float(np.sum((y - (slope * x + intercept)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return LinearFit(float(slope), float(intercept), r2)


def stationarity_fit(mf: MeanField) -> LinearFit:
    """Regress ``log xi`` on the total potential; a stationary density has slope ``-beta``."""
    return linear_fit(mf.E0 + mf.E1, np.log(mf.xi))


@dataclass(frozen=True, eq=False)
class SinhPoissonField:
    mesh: Mesh
    xi_plus: np.ndarray
    xi_minus: np.ndarray
    omega: np.ndarray
    E0: np.ndarray
    beta: float
    iterations: int
    residual: float

    @property
    def psi(self) -> np.ndarray:
        return self.E0 / (2 * math.pi)

    def header(self) -> dict:
        return {
            "beta": self.beta,
            "mesh": self.mesh.P,
            "side": self.mesh.domain.side,
            "iterations": self.iterations,
            "residual": self.residual,
            "circulation": self.mesh.integrate(self.omega),
        }


def seed_pattern(mesh: Mesh) -> np.ndarray:
    """Zero-mean perturbation used to leave the symmetric state ``omega = 0``."""
    x = mesh.coords / mesh.domain.side
    X, Y = np.meshgrid(x, x)
    return np.cos(np.pi * X) + 0.5 * np.cos(np.pi * Y)


def solve_sinh_poisson(
    beta: float,
    mesh_resolution: int,
    tol: float = 1e-11,
    max_iter: int = 5000,
    side: float = 1.0,
    damping: float = 0.5,
    seed_amplitude: float = 0.5,
    swap_species: bool = False,
    density_cap: float = 1e6,
) -> SinhPoissonField:
    """Two species of opposite sign, each normalized to unit mass.

    ``xi_+ <- normalize(exp(-beta E0[omega]))``,
    ``xi_- <- normalize(exp(+beta E0[omega]))``, ``omega = xi_+ - xi_-``.
    The iteration starts from ``(1 +- a * seed) / A``; ``swap_species``
    exchanges the two starting densities, which maps ``omega`` to ``-omega``.
    """
    if mesh_resolution < 16:
        raise ValidationError(f"mesh_resolution must be >= 16, got {mesh_resolution}")
    if not math.isfinite(beta):
        raise AdmissibilityError(f"beta must be finite, got {beta}")
    mesh = Mesh(Domain(side), mesh_resolution)
    A = mesh.domain.area
    s = seed_amplitude * seed_pattern(mesh)
    plus, minus = 1.0 + s, 1.0 - s
    if swap_species:
        plus, minus = minus, plus

    def update(state):
        E0 = log_potential((state[0] - state[1]) / A, mesh)
        p = _normalized_exp(-beta * E0, mesh)[0] * A
        m = _normalized_exp(beta * E0, mesh)[0] * A
        return p, m

    (p, m), it, res = _picard(update, (plus, minus), tol, max_iter, damping, density_cap, "sinh-Poisson solve")
    xp, xm = p / A, m / A
    omega = xp - xm
    return SinhPoissonField(mesh, xp, xm, omega, log_potential(omega, mesh), beta, it, res)


@dataclass(frozen=True)
class SinhFit:
    amplitude: float
    shift: float
    rms: float


def sinh_fit(sp: SinhPoissonField) -> SinhFit:
    """Fit ``omega = c sinh(-beta (E0 - e))`` over the mesh.

    The model equals ``a exp(-beta E0) - b exp(beta E0)`` with ``a, b > 0``,
    which is linear in ``(a, b)``.
    """
    E = sp.E0.ravel()
    w = sp.omega.ravel()
    X = np.column_stack([np.exp(-sp.beta * E), -np.exp(sp.beta * E)])
    (a, b), *_ = np.linalg.lstsq(X, w, rcond=None)
    rms = float(np.sqrt(np.mean((X @ [a, b] - w) ** 2)))
    if a <= 0 or b <= 0 or sp.beta == 0:
        return SinhFit(0.0, 0.0, rms)
    return SinhFit(2 * math.sqrt(a * b), math.log(a / b) / (2 * sp.beta), rms)
