import itertools
import math

import numpy as np
import pytest
from scipy.special import logsumexp

from pointvortex.ensemble import (
    Ensemble,
    box_mean_separation,
    count_macrostates,
    degeneracy_log,
    enumerate_macrostates,
    f_var,
    gibbs_entropy,
    landau_concentration,
    macrostate_array,
    macrostate_probability,
    neighbourhood_mass,
    order_h_term,
    partition_function_log,
    remainder_average_mc,
)
from pointvortex.exceptions import EnumerationTooLargeError, NormalizationError, UndefinedFreeEnergyError, ValidationError
from pointvortex.geometry import CoarseGrid, Domain, Macrostate, VortexConfiguration
from pointvortex.hamiltonian import coarse_energy, remainder_energy


def labelled_log_z(N, grid, beta, lam):
    """Sum over every assignment of labelled vortices to boxes."""
    terms = []
    for a in itertools.product(range(grid.M), repeat=N):
        s = Macrostate(tuple(np.bincount(a, minlength=grid.M)))
        terms.append(-beta * coarse_energy(s, grid, lam))
    return float(logsumexp(terms)) + 2 * N * math.log(grid.h)


def test_enumeration_order_and_count():
    assert [s.occupations for s in enumerate_macrostates(2, 2)] == [(2, 0), (1, 1), (0, 2)]
    for N, M in [(0, 3), (5, 1), (4, 4), (10, 4)]:
        arr = macrostate_array(N, M)
        assert len(arr) == count_macrostates(N, M) == math.comb(N + M - 1, M - 1)
        assert np.all(arr.sum(axis=1) == N)
        assert len({tuple(r) for r in arr}) == len(arr)


def test_enumeration_cap():
    with pytest.raises(EnumerationTooLargeError):
        macrostate_array(60, 16)


def test_degeneracy():
    assert math.exp(degeneracy_log(Macrostate((2, 1, 1)))) == pytest.approx(12)


@pytest.mark.parametrize("N, nx, ny, beta, lam", [(3, 2, 1, 0.7, 1.0), (4, 2, 2, -0.3, 0.5), (5, 3, 1, 1.3, 0.8)])
def test_partition_function_matches_labelled_sum(N, nx, ny, beta, lam):
    g = CoarseGrid(Domain(1.3), nx, ny)
    assert partition_function_log(N, g, beta, lam) == pytest.approx(labelled_log_z(N, g, beta, lam), rel=1e-12)


def test_beta_zero_is_free_volume():
    for side in (0.5, 1.0, 3.0):
        g = CoarseGrid.square(Domain(side), 2)
        assert partition_function_log(6, g, 0.0) == pytest.approx(6 * math.log(side**2), abs=1e-10)


def test_probabilities():
    g = CoarseGrid.square(Domain(), 2)
    ens = Ensemble(5, g, 1.1, 0.6)
    assert ens.P.sum() == pytest.approx(1.0, abs=1e-12)
    s = Macrostate((2, 1, 1, 1))
    assert macrostate_probability(s, g, 1.1, 0.6) == pytest.approx(ens.P[ens.index_of(s)])
    with pytest.raises(ValidationError):
        ens.index_of(Macrostate((5, 0, 0)))
    # symmetric boxes share probability
    assert ens.P[ens.index_of(Macrostate((2, 1, 1, 1)))] == pytest.approx(ens.P[ens.index_of(Macrostate((1, 1, 1, 2)))])


def test_gibbs_entropy():
    assert gibbs_entropy([0.25] * 4) == pytest.approx(math.log(4))
    assert gibbs_entropy([1.0, 0.0]) == 0.0
    with pytest.raises(NormalizationError):
        gibbs_entropy([0.5, 0.4])
    with pytest.raises(NormalizationError):
        gibbs_entropy([1.5, -0.5])


def test_landau_concentrates_at_strong_coupling():
    g = CoarseGrid(Domain(10.0), 2, 1)
    s, p = landau_concentration(10, g, 5.0)
    assert p >= 0.999
    assert s.occupations == (5, 5)
    ens = Ensemble(10, g, 5.0)
    assert neighbourhood_mass(ens, s, 0) == pytest.approx(p)
    assert neighbourhood_mass(ens, s, 10) == pytest.approx(1.0)
    full = f_var(10, g, 5.0, mode="full").F_var
    landau = f_var(10, g, 5.0, mode="landau").F_var
    assert landau == pytest.approx(full, rel=1e-3)


@pytest.mark.parametrize("beta", [0.5, -0.7, 2.0])
def test_free_energy_two_routes_agree(beta):
    r = f_var(4, CoarseGrid.square(Domain(), 2), beta, 0.8)
    assert r.F_var == pytest.approx(r.F_var_gibbs, rel=1e-12, abs=1e-12)
    assert r.F0 == pytest.approx(-partition_function_log(4, CoarseGrid.square(Domain(), 2), beta, 0.8) / beta)


def test_f_var_rejects_beta_zero_and_bad_mode():
    g = CoarseGrid.square(Domain(), 2)
    with pytest.raises(UndefinedFreeEnergyError):
        f_var(2, g, 0.0)
    with pytest.raises(ValidationError):
        f_var(2, g, 1.0, mode="saddle")


def test_box_mean_separation_square_and_rectangle():
    assert box_mean_separation(1.0, 1.0) == pytest.approx(0.5214054331647207, rel=1e-12)
    rng = np.random.default_rng(0)
    a, b = 2.0, 0.5
    p, q = rng.random((2, 400_000, 2)) * [a, b]
    mc = np.linalg.norm(p - q, axis=1).mean()
    assert box_mean_separation(a, b) == pytest.approx(mc, rel=3e-3)


def test_order_h_term_matches_monte_carlo():
    g = CoarseGrid.square(Domain(), 2)
    ens = Ensemble(4, g, 0.8, 1.0)
    rng = np.random.default_rng(7)
    vals = []
    for k in rng.choice(len(ens.states), size=20_000, p=ens.P):
        boxes = np.repeat(np.arange(g.M), ens.states[k])
        p = g.centers[boxes] + (rng.random((4, 2)) - 0.5) * g.h
        vals.append(remainder_energy(VortexConfiguration(p), g).inter_box_correction)
    se = np.std(vals) / math.sqrt(len(vals))
    assert abs(np.mean(vals) - order_h_term(ens)) < 4 * se


def test_remainder_average_mc_is_reproducible():
    g = CoarseGrid.square(Domain(), 2)
    a = remainder_average_mc(3, g, 0.5, 1.0, 200, seed=3)
    assert a == remainder_average_mc(3, g, 0.5, 1.0, 200, seed=3)
    assert a[1] > 0
