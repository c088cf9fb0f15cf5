import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from pointvortex.estimators import BoxOccupancy, MeanFieldDensity, VortexSampler


def test_params_round_trip_and_clone():
    est = VortexSampler(n_vortices=7, beta=0.4, random_state=3)
    assert est.get_params()["n_vortices"] == 7
    c = clone(est).set_params(beta=-0.1)
    assert c.beta == -0.1 and est.beta == 0.4


def test_sampler_fit_is_deterministic():
    a = VortexSampler(n_vortices=6, steps=2000, random_state=5).fit()
    b = VortexSampler(n_vortices=6, steps=2000, random_state=5).fit()
    assert np.array_equal(a.samples_, b.samples_)
    assert a.samples_.shape == (2000, 12)


def test_box_occupancy_counts():
    X = np.array([[0.1, 0.1, 0.9, 0.9, 0.6, 0.1]])
    out = BoxOccupancy(n_boxes=4).fit().transform(X)
    assert out.tolist() == [[1.0, 1.0, 0.0, 1.0]]
    with pytest.raises(NotFittedError):
        BoxOccupancy().transform(X)
    with pytest.raises(ValueError):
        BoxOccupancy().fit().transform(np.ones((1, 3)) * 0.5)


def test_sampler_output_feeds_occupancy():
    s = VortexSampler(n_vortices=8, steps=500, random_state=0).fit()
    counts = BoxOccupancy(n_boxes=4).fit_transform(s.samples_)
    assert np.all(counts.sum(axis=1) == 8)


@pytest.mark.parametrize("kw", [{}, {"n_vortices": 64, "n_boxes": 16}, {"n_vortices": 100}])
def test_density_model_normalized(kw):
    m = MeanFieldDensity(beta=-1.0, mesh_resolution=32, **kw).fit()
    ny, nx = m.density_.shape
    assert m.density_.sum() / (nx * ny) == pytest.approx(1.0, rel=1e-10)


def test_density_model_prefers_dense_region():
    m = MeanFieldDensity(beta=2.0, mesh_resolution=32).fit()
    centre, corner = m.score_samples([[0.5, 0.5], [0.01, 0.01]])
    assert centre > corner
    assert m.score([[0.5, 0.5], [0.01, 0.01]]) == pytest.approx(centre + corner)
    with pytest.raises(ValueError):
        MeanFieldDensity(n_boxes=4).fit()
