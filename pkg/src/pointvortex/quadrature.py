"""Exact free energy of very small vortex gases by direct quadrature.

``Z = int exp(-beta H) dx_1..dx_N`` over the square, for ``N <= 3``.  The
2N-dimensional integral uses a tensor product of composite Gauss-Legendre
rules.  Each vortex gets a rule of a different order, so nodes of different
vortices never coincide and the log singularity is never sampled exactly.
Convergence is judged by comparing two resolutions.

For ``N = 2`` the integral also collapses to a one-dimensional angular
integral (:func:`pair_partition_reduced`), used as an independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .exceptions import OracleUnconvergedError, UndefinedFreeEnergyError, ValidationError
from .geometry import Domain
from .sampler import DEFAULT_BETA_MIN_SCALED, check_admissible


@dataclass(frozen=True)
class OracleResult:
    F: float
    log_Z: float
    log_Z_coarse: float
    rel_diff: float


def _rule_1d(side, panels, order):
    x, w = np.polynomial.legendre.leggauss(order)
    a = side / panels
    left = np.arange(panels) * a
    nodes = (left[:, None] + (x[None, :] + 1) * a / 2).ravel()
    weights = np.tile(w * a / 2, panels)
    return nodes, weights


def _rule_2d(side, panels, order):
    x, w = _rule_1d(side, panels, order)
    X, Y = np.meshgrid(x, x, indexing="ij")
    W = np.outer(w, w)
    return np.column_stack([X.ravel(), Y.ravel()]), W.ravel()


def _pair_factor(a, b, power, eps):
    r = np.hypot(a[:, None, 0] - b[None, :, 0], a[:, None, 1] - b[None, :, 1])
    return np.maximum(r, eps) ** power


def tensor_partition(N: int, domain: Domain, beta: float, lam: float, panels: int, order: int, eps: float = 1e-12) -> float:
    """Tensor-grid estimate of ``Z`` (not log)."""
    p = beta * lam * lam  # exp(-beta H) = prod_{i<j} r_ij^{beta lam^2}
    rules = [_rule_2d(domain.side, panels, order + v) for v in range(N)]
    if N == 1:
        return float(rules[0][1].sum())
    (x1, w1), (x2, w2) = rules[0], rules[1]
    if N == 2:
        total = 0.0
        for i in range(0, len(x1), 512):
            total += float(w1[i : i + 512] @ _pair_factor(x1[i : i + 512], x2, p, eps) @ w2)
        return total
    x3, w3 = rules[2]
    C = _pair_factor(x2, x3, p, eps) * w2[:, None] * w3[None, :]
    total = 0.0
    for i in range(0, len(x1), 64):
        A = _pair_factor(x1[i : i + 64], x2, p, eps)
        B = _pair_factor(x1[i : i + 64], x3, p, eps)
        total += float(w1[i : i + 64] @ ((A @ C) * B).sum(axis=1))
    return total


def pair_partition_reduced(domain: Domain, beta: float, lam: float = 1.0) -> float:
    """``Z`` for two vortices via the separation-vector reduction.

    ``Z = int g(u) |u|^p du`` with ``g`` the autocorrelation of the square;
    in polar coordinates the radial integral is elementary.
    """
    p = beta * lam * lam
    if p <= -2:
        raise UndefinedFreeEnergyError(f"pair integral diverges for beta*lam^2 = {p} <= -2")
    s = domain.side

    def f(theta):
        c, sn = math.cos(theta), math.sin(theta)
        R = s / c
        return (
            s * s * R ** (p + 2) / (p + 2)
            - s * (c + sn) * R ** (p + 3) / (p + 3)
            + c * sn * R ** (p + 4) / (p + 4)
        )

    val, _ = integrate.quad(f, 0.0, math.pi / 4, epsabs=0, epsrel=1e-13, limit=200)
    return 8 * val


def exact_free_energy_oracle(
    N: int,
    domain: Domain,
    beta: float,
    lam: float = 1.0,
    panels: int = 2,
    order: int = 8,
    max_panels: int = 16,
    rtol: float = 5e-3,
    eps: float = 1e-12,
    beta_min_scaled: float = DEFAULT_BETA_MIN_SCALED,
) -> OracleResult:
    """``F = -log(Z) / beta`` by tensor quadrature with a two-resolution check.

    The panel count doubles until consecutive ``Z`` estimates agree within
    ``rtol`` (relative); the pair singularity ``r^(beta lam^2)`` makes the
    error decay like ``panels^-(2 + beta lam^2)``, and that rate is used for
    one Richardson step on the last two estimates.  Raises
    :class:`OracleUnconvergedError` if ``max_panels`` is reached first.
    """
    if not 1 <= N <= 3:
        raise ValidationError(f"quadrature oracle supports N <= 3, got {N}")
    if beta == 0:
        raise UndefinedFreeEnergyError("free energy is undefined at beta = 0")
    if N >= 2:
        check_admissible(beta, lam, N, beta_min_scaled)
    eps = eps * domain.side
    rate = min(2.0, 2.0 + beta * lam * lam) if N >= 2 else 2.0
    z_c = tensor_partition(N, domain, beta, lam, panels, order, eps)
    while True:
        panels *= 2
        z_f = tensor_partition(N, domain, beta, lam, panels, order, eps)
        rel = abs(z_f / z_c - 1.0)
        if rel <= rtol:
            break
        if panels >= max_panels:
            raise OracleUnconvergedError(
                f"quadrature not converged at {panels} panels: Z = {z_c:.10g} vs {z_f:.10g} "
                f"(rel diff {rel:.3e} > {rtol})",
                coarse=z_c,
                fine=z_f,
            )
        z_c = z_f
    z = z_f + (z_f - z_c) / (2.0**rate - 1.0)
    return OracleResult(F=-math.log(z) / beta, log_Z=math.log(z), log_Z_coarse=math.log(z_c), rel_diff=rel)
