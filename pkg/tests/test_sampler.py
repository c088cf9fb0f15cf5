import math

import numpy as np
import pytest
from scipy.stats import chisquare

from pointvortex.exceptions import AdmissibilityError, ValidationError
from pointvortex.geometry import CoarseGrid, Domain, VortexConfiguration
from pointvortex.hamiltonian import full_energy
from pointvortex.sampler import (
    SamplerConfig,
    acceptance_probability,
    batch_means_error,
    check_admissible,
    clustering_radius,
    discretized_transition_matrix,
    initial_uniform,
    occupation_histogram,
    sample_canonical,
    scaled_beta,
)


def test_acceptance_probability():
    assert acceptance_probability(-1.0, 2.0) == 1.0
    assert acceptance_probability(1.0, 2.0) == pytest.approx(math.exp(-2.0))
    assert acceptance_probability(1.0, -2.0) == 1.0  # negative temperature favours higher energy
    assert acceptance_probability(-1.0, -2.0) == pytest.approx(math.exp(-2.0))
    assert acceptance_probability(5.0, 0.0) == 1.0


@pytest.mark.parametrize("beta", [1.5, 0.0, -0.8])
def test_lattice_kernel_detailed_balance(beta):
    _, P, w = discretized_transition_matrix(4, beta, reach=1)
    assert np.allclose(P.sum(axis=1), 1.0, atol=1e-14)
    assert np.all(P >= -1e-15)
    flux = w[:, None] * P
    assert np.allclose(flux, flux.T, rtol=1e-12, atol=1e-15)
    pi = w / w.sum()
    assert np.allclose(pi @ P, pi, atol=1e-14)


def test_admissibility():
    assert scaled_beta(-100.0, 0.01, 100) == pytest.approx(-1.0)
    check_admissible(-3.9, 1.0, 1)
    with pytest.raises(AdmissibilityError):
        check_admissible(-4.0, 1.0, 1)
    with pytest.raises(AdmissibilityError):
        sample_canonical(initial_uniform(4, 0), SamplerConfig(beta=-1.0, steps=10, seed=0))


def test_config_lists_every_problem():
    with pytest.raises(ValidationError) as e:
        SamplerConfig(beta=math.nan, steps=0, seed=-1, thin=0, step_size=-1.0)
    msg = str(e.value)
    for word in ("beta", "steps", "thin", "step_size", "seed"):
        assert word in msg


def test_same_seed_same_chain_and_different_seed_differs():
    cfg = SamplerConfig(beta=0.5, steps=3000, seed=42, thin=3, burn_in=300)
    a = sample_canonical(initial_uniform(8, 1), cfg)
    b = sample_canonical(initial_uniform(8, 1), cfg)
    assert np.array_equal(a.positions, b.positions) and np.array_equal(a.energies, b.energies)
    c = sample_canonical(initial_uniform(8, 1), SamplerConfig(beta=0.5, steps=3000, seed=43, thin=3, burn_in=300))
    assert not np.array_equal(a.positions, c.positions)


def test_chain_bookkeeping():
    cfg = SamplerConfig(beta=-0.2, steps=1000, seed=3, thin=7, burn_in=100)
    ch = sample_canonical(initial_uniform(6, 2, lam=0.5), cfg)
    assert len(ch) == (1000 - 100) // 7
    assert 0.0 <= ch.acceptance_rate <= 1.0
    assert np.all(Domain().contains(ch.positions.reshape(-1, 2)))
    for k in (0, len(ch) // 2, len(ch) - 1):
        assert ch.energies[k] == pytest.approx(full_energy(ch.samples[k]), rel=1e-12, abs=1e-12)
    h = ch.header()
    assert h["type"] == "header" and h["N"] == 6 and h["seed"] == 3


def test_tuning_only_changes_step_during_burn_in():
    base = dict(beta=0.0, steps=4000, seed=1, step_size=0.01)
    fixed = sample_canonical(initial_uniform(5, 0), SamplerConfig(**base, burn_in=2000))
    tuned = sample_canonical(initial_uniform(5, 0), SamplerConfig(**base, burn_in=2000, tune=True))
    assert fixed.final_step_size == 0.01
    assert tuned.final_step_size > 0.01


def test_step_larger_than_domain_rejected():
    with pytest.raises(ValidationError):
        SamplerConfig(beta=0.0, steps=10, seed=0, step_size=2.0).resolved_step(Domain())


def test_beta_zero_occupations_are_uniform():
    g = CoarseGrid.square(Domain(), 2)
    ch = sample_canonical(initial_uniform(20, 0), SamplerConfig(beta=0.0, steps=200_000, seed=9, step_size=1.0, thin=400))
    h = occupation_histogram(ch, g)
    counts = h.mean * len(ch)
    assert chisquare(counts).pvalue > 1e-3
    assert np.allclose(h.mean, 5.0, atol=5 * h.std_error.max())


def test_histogram_table_sums_to_one():
    g = CoarseGrid.square(Domain(), 2)
    ch = sample_canonical(initial_uniform(3, 0), SamplerConfig(beta=1.0, steps=2000, seed=1, thin=10))
    t = occupation_histogram(ch, g, full_table=True).table
    assert sum(t.values()) == pytest.approx(1.0)
    assert all(sum(k) == 3 for k in t)


def test_clustering_radius_of_known_configuration():
    from pointvortex.sampler import Chain
    p = np.array([[[0.0, 0.0], [1.0, 0.0]]])
    cfg = SamplerConfig(beta=0.0, steps=1, seed=0)
    ch = Chain(p, np.zeros(1), 0.0, 0.0, 0, 1.0, Domain(), cfg)
    assert clustering_radius(ch) == pytest.approx(0.5)


def test_batch_means_on_independent_data():
    x = np.random.default_rng(0).normal(size=20_000)
    assert batch_means_error(x) == pytest.approx(1 / math.sqrt(20_000), rel=0.4)
    with pytest.raises(ValidationError):
        batch_means_error([1.0] * 5)


def test_coincident_initial_configuration_rejected():
    from pointvortex.exceptions import SingularConfigurationError
    with pytest.raises(SingularConfigurationError):
        sample_canonical(VortexConfiguration([[0.5, 0.5], [0.5, 0.5]]), SamplerConfig(beta=0.0, steps=10, seed=0))
