"""Equilibrium statistics of the two-dimensional point-vortex gas.

Exact macrostate ensembles of the coarse-grained Hamiltonian, a Metropolis
sampler valid at positive and negative temperature, the finite-N occupation
fixed point, and the continuum mean-field and sinh-Poisson solvers.
"""

from .continuum import MeanField, SinhPoissonField, solve_continuum, solve_sinh_poisson
from .ensemble import Ensemble, FreeEnergyReport, enumerate_macrostates, f_var, landau_concentration, partition_function_log
from .exceptions import (
    AdmissibilityError,
    ConvergenceError,
    DomainViolationError,
    PointVortexError,
    ValidationError,
)
from .geometry import CoarseGrid, Domain, Macrostate, VortexConfiguration, assign_boxes
from .hamiltonian import coarse_energy, full_energy, remainder_energy
from .meanfield import OccupationSolution, finite_vs_continuum, occupation_fixed_point, scaling_limits, self_energy_decay_study
from .quadrature import exact_free_energy_oracle
from .sampler import Chain, SamplerConfig, clustering_radius, occupation_histogram, sample_canonical

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityError", "Chain", "CoarseGrid", "ConvergenceError", "Domain", "DomainViolationError",
    "Ensemble", "FreeEnergyReport", "Macrostate", "MeanField", "OccupationSolution", "PointVortexError",
    "SamplerConfig", "SinhPoissonField", "ValidationError", "VortexConfiguration", "assign_boxes",
    "clustering_radius", "coarse_energy", "enumerate_macrostates", "exact_free_energy_oracle", "f_var",
    "finite_vs_continuum", "full_energy", "landau_concentration", "occupation_fixed_point",
    "occupation_histogram", "partition_function_log", "remainder_energy", "sample_canonical",
    "scaling_limits", "self_energy_decay_study", "solve_continuum", "solve_sinh_poisson",
]
