import math

import numpy as np
import pytest
from scipy import integrate

from pointvortex.continuum import (
    Mesh,
    cell_log_average,
    laplacian,
    linear_fit,
    log_potential,
    log_potential_direct,
    poisson_residual,
    sinh_fit,
    solve_continuum,
    solve_sinh_poisson,
    stationarity_fit,
)
from pointvortex.exceptions import AdmissibilityError, ConvergenceError, ValidationError
from pointvortex.geometry import Domain


def test_cell_log_average_matches_quadrature():
    d = 0.3
    val, _ = integrate.dblquad(lambda y, x: 0.5 * math.log(x * x + y * y), 0, d / 2, 0, d / 2, epsabs=1e-13)
    assert cell_log_average(d) == pytest.approx(val / (d / 2) ** 2, rel=1e-10)


def test_fft_potential_matches_direct_sum():
    m = Mesh(Domain(1.7), 14)
    xi = np.random.default_rng(0).random((14, 14))
    assert np.allclose(log_potential(xi, m), log_potential_direct(xi, m), rtol=0, atol=1e-13)


def test_potential_of_uniform_density_approaches_exact_integral():
    # E0 at the centre of the unit square for xi = 1: 4 * int over [0,1/2]^2 of log r
    exact = 4 * 0.25 * cell_log_average(1.0)
    m = Mesh(Domain(), 64)
    e = log_potential(np.ones((64, 64)), m)
    centre = e[31:33, 31:33].mean()
    assert centre == pytest.approx(exact, abs=1e-3)


def test_laplacian_of_quadratic():
    x = np.linspace(0, 1, 20)
    X, Y = np.meshgrid(x, x)
    assert np.allclose(laplacian(X**2 + 3 * Y**2, x[1] - x[0]), 8.0)


def test_beta_zero_is_uniform():
    mf = solve_continuum(0.0, 32, side=2.0)
    assert np.allclose(mf.xi, 0.25, rtol=1e-14)
    assert mf.d == pytest.approx(0.25)


@pytest.mark.parametrize("beta", [-1.5, 1.0, 2.5])
def test_solution_is_stationary(beta):
    mf = solve_continuum(beta, 32)
    assert mf.mesh.integrate(mf.xi) == pytest.approx(1.0, rel=1e-12)
    fit = stationarity_fit(mf)
    assert fit.slope == pytest.approx(-beta, rel=1e-8)
    assert fit.r_squared >= 1 - 1e-10
    assert np.allclose(mf.xi, mf.d * np.exp(-beta * mf.E0), rtol=1e-9)


def test_poisson_residual_is_second_order():
    r = [poisson_residual(solve_continuum(-1.0, P)) for P in (32, 64)]
    assert r[0] / r[1] >= 3.5


def test_finite_n_self_energy_vanishes_with_n():
    base = solve_continuum(-1.0, 32)
    gaps = [np.abs(solve_continuum(-1.0, 32, include_E1=True, N_for_E1=N).xi - base.xi).max() for N in (16, 256)]
    assert gaps[1] < gaps[0]


def test_continuum_errors():
    with pytest.raises(ValidationError):
        solve_continuum(1.0, 8)
    with pytest.raises(ValidationError):
        solve_continuum(1.0, 32, include_E1=True)
    with pytest.raises(AdmissibilityError):
        solve_continuum(-4.0, 32)
    with pytest.raises(ConvergenceError):
        solve_continuum(3.0, 32, max_iter=3)


def test_linear_fit_exact_line():
    f = linear_fit([0, 1, 2, 3], [1, -1, -3, -5])
    assert (f.slope, f.intercept, f.r_squared) == pytest.approx((-2.0, 1.0, 1.0))


def test_sinh_poisson_beta_zero_is_trivial():
    sp = solve_sinh_poisson(0.0, 32)
    assert np.abs(sp.omega).max() <= 1e-12


def test_sinh_poisson_below_threshold_is_trivial():
    sp = solve_sinh_poisson(0.8, 32)
    assert np.abs(sp.omega).max() <= 1e-9


def test_sinh_poisson_species_swap_is_exact_negation():
    a = solve_sinh_poisson(1.5, 32)
    b = solve_sinh_poisson(1.5, 32, swap_species=True)
    assert np.abs(a.omega).max() > 0.1
    assert np.array_equal(b.omega, -a.omega)
    fit = sinh_fit(a)
    assert fit.rms <= 1e-8 and fit.amplitude > 0
    assert a.mesh.integrate(a.omega) == pytest.approx(0.0, abs=1e-12)
