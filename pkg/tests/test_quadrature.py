import math

import pytest

from pointvortex.exceptions import AdmissibilityError, OracleUnconvergedError, UndefinedFreeEnergyError, ValidationError
from pointvortex.geometry import Domain
from pointvortex.quadrature import exact_free_energy_oracle, pair_partition_reduced, tensor_partition


def test_single_vortex_is_free_volume():
    r = exact_free_energy_oracle(1, Domain(2.0), 0.5)
    assert r.log_Z == pytest.approx(math.log(4.0), rel=1e-13)


def test_pair_reduction_at_zero_coupling_is_area_squared():
    assert pair_partition_reduced(Domain(1.5), 0.0) == pytest.approx(1.5**4, rel=1e-12)


def test_pair_reduction_linear_moment():
    # p = 1 gives A^2 times the mean separation of two uniform points
    assert pair_partition_reduced(Domain(), 1.0) == pytest.approx(0.5214054331647207, rel=1e-10)


@pytest.mark.parametrize("beta", [0.5, 1.0, -0.5])
def test_tensor_rule_matches_reduced_form(beta):
    r = exact_free_energy_oracle(2, Domain(), beta)
    z = pair_partition_reduced(Domain(), beta)
    assert r.log_Z == pytest.approx(math.log(z), abs=2e-4)


def test_near_zero_beta_limit():
    r = exact_free_energy_oracle(3, Domain(2.0), 1e-6, order=4)
    assert r.log_Z == pytest.approx(3 * math.log(4.0), abs=1e-5)


def test_tensor_partition_is_positive_and_panel_convergent():
    d = Domain()
    z = [tensor_partition(2, d, 0.5, 1.0, p, 6) for p in (2, 4, 8)]
    assert all(v > 0 for v in z)
    assert abs(z[2] - z[1]) < abs(z[1] - z[0])


def test_errors():
    with pytest.raises(ValidationError):
        exact_free_energy_oracle(4, Domain(), 1.0)
    with pytest.raises(UndefinedFreeEnergyError):
        exact_free_energy_oracle(2, Domain(), 0.0)
    with pytest.raises(AdmissibilityError):
        exact_free_energy_oracle(2, Domain(), -2.5)
    with pytest.raises(UndefinedFreeEnergyError):
        pair_partition_reduced(Domain(), -2.0)
    with pytest.raises(OracleUnconvergedError):
        exact_free_energy_oracle(2, Domain(), -1.5, max_panels=4, rtol=1e-8)
