"""scikit-learn style wrappers around the sampler and the mean-field solvers.

Configurations are passed as arrays of shape ``(n_samples, 2 N)`` holding
``x_1, y_1, x_2, y_2, ...``; points as ``(n_points, 2)``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .continuum import solve_continuum
from .geometry import CoarseGrid, Domain
from .meanfield import occupation_fixed_point, raw_beta
from .sampler import (
    DEFAULT_BETA_MIN_SCALED,
    SamplerConfig,
    clustering_radius_series,
    initial_uniform,
    sample_canonical,
)


class BoxOccupancy(TransformerMixin, BaseEstimator):
    """Map vortex configurations to per-box occupation counts."""

    def __init__(self, n_boxes=16, side=1.0):
        self.n_boxes = n_boxes
        self.side = side

    def fit(self, X=None, y=None):
        self.grid_ = CoarseGrid.with_box_count(Domain(self.side), self.n_boxes)
        return self

    def transform(self, X):
        check_is_fitted(self, "grid_")
        X = check_array(X)
        if X.shape[1] % 2:
            raise ValueError(f"expected an even number of columns (x, y pairs), got {X.shape[1]}")
        S = X.shape[0]
        idx = self.grid_.box_index(X.reshape(-1, 2)).reshape(S, -1)
        out = np.zeros((S, self.grid_.M))
        np.add.at(out, (np.repeat(np.arange(S), idx.shape[1]), idx.ravel()), 1.0)
        return out


class VortexSampler(BaseEstimator):
    """Metropolis chain for ``n_vortices`` at inverse temperature ``beta``.

    ``fit`` ignores ``X`` and runs the chain; samples end up in
    ``samples_`` with shape ``(n_samples, 2 N)``.
    """

    def __init__(self, n_vortices=10, beta=0.0, lam=1.0, steps=10_000, step_size=None, burn_in=0, thin=1, side=1.0, random_state=0, beta_min_scaled=DEFAULT_BETA_MIN_SCALED):
        self.n_vortices = n_vortices
        self.beta = beta
        self.lam = lam
        self.steps = steps
        self.step_size = step_size
        self.burn_in = burn_in
        self.thin = thin
        self.side = side
        self.random_state = random_state
        self.beta_min_scaled = beta_min_scaled

    def fit(self, X=None, y=None):
        cfg = SamplerConfig(
            beta=self.beta, steps=self.steps, seed=int(self.random_state), step_size=self.step_size,
            thin=self.thin, burn_in=self.burn_in, beta_min_scaled=self.beta_min_scaled,
        )
        start = initial_uniform(self.n_vortices, cfg.seed, self.lam, Domain(self.side))
        self.chain_ = sample_canonical(start, cfg)
        self.samples_ = self.chain_.positions.reshape(len(self.chain_), -1)
        self.acceptance_rate_ = self.chain_.acceptance_rate
        self.clustering_radius_ = float(clustering_radius_series(self.chain_).mean())
        return self


def _cell_lookup(points, side, nx, ny):
    ix = np.clip((points[:, 0] / side * nx).astype(int), 0, nx - 1)
    iy = np.clip((points[:, 1] / side * ny).astype(int), 0, ny - 1)
    return iy, ix


class MeanFieldDensity(BaseEstimator):
    """Vorticity density from the mean-field equation, used as a density model.

    With ``n_boxes`` set, the finite-N occupation fixed point on that grid is
    solved (``beta`` scaled, ``lam = 1 / n_vortices``); otherwise the
    continuum equation on a ``mesh_resolution`` mesh, optionally with the
    self-energy of ``n_vortices``.  The density is normalized to unit mass,
    so ``score_samples`` is a log-likelihood per point.
    """

    def __init__(self, beta=0.0, mesh_resolution=64, n_vortices=None, n_boxes=None, side=1.0, tol=1e-11, max_iter=10_000):
        self.beta = beta
        self.mesh_resolution = mesh_resolution
        self.n_vortices = n_vortices
        self.n_boxes = n_boxes
        self.side = side
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X=None, y=None):
        if self.n_boxes is not None:
            if self.n_vortices is None:
                raise ValueError("n_boxes requires n_vortices")
            grid = CoarseGrid.with_box_count(Domain(self.side), self.n_boxes)
            sol = occupation_fixed_point(grid, self.n_vortices, raw_beta(self.beta, self.n_vortices), tol=self.tol, max_iter=self.max_iter)
            self.density_ = (sol.occupations / (self.n_vortices * grid.box_area)).reshape(grid.ny, grid.nx)
            self.solution_ = sol
        else:
            mf = solve_continuum(
                self.beta, self.mesh_resolution, tol=self.tol, max_iter=self.max_iter,
                include_E1=self.n_vortices is not None, N_for_E1=self.n_vortices, side=self.side,
            )
            self.density_ = mf.xi
            self.solution_ = mf
        return self

    def score_samples(self, X):
        check_is_fitted(self, "density_")
        X = check_array(X)
        ny, nx = self.density_.shape
        return np.log(self.density_[_cell_lookup(X, self.side, nx, ny)])

    def score(self, X, y=None):
        return float(self.score_samples(X).sum())
