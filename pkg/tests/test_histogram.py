import numpy as np
import pytest

from tailkde.core.data import DataMatrix, TailRegion
from tailkde.core.errors import DataError
from tailkde.services.histogram import fit_tail_histogram, hist_fit, hist_tail_density, ns_binwidth

DATA = DataMatrix(np.array([0.1, 0.2, 1.5]))


def test_bin_counts_and_density():
    model = hist_fit(DATA, 1.0, origin=0.0)
    assert model.counts == {(0,): 2, (1,): 1}
    assert model.total_mass() == pytest.approx(1.0)
    assert model.density(np.array([[0.5]]))[0] == pytest.approx(2.0 / 3.0)
    assert model.density(np.array([[3.5]]))[0] == 0.0


def test_density_on_bin_edge_averages_neighbours():
    model = hist_fit(DATA, 1.0, origin=0.0)
    assert model.density(np.array([[1.0]]))[0] == pytest.approx(0.5)


def test_binwidth_must_be_positive():
    with pytest.raises(DataError):
        hist_fit(DATA, 0.0)


def test_restrict_keeps_upper_bins():
    tail = hist_fit(DATA, 1.0, origin=0.0).restrict(np.array([1.0]))
    assert tail.counts == {(1,): 1}
    assert tail.total_mass() == pytest.approx(1.0 / 3.0)


def test_normal_scale_binwidth():
    data = DataMatrix(np.array([0.0, 1.0, 2.0, 3.0]))
    s = data.std()[0]
    expected = 2.0 * 3.0 ** (1.0 / 3.0) * np.pi ** 0.2 * s * 4 ** (-1.0 / 3.0)
    assert ns_binwidth(data)[0] == pytest.approx(expected)


def test_binwidth_needs_two_points():
    with pytest.raises(DataError):
        ns_binwidth(DataMatrix(np.array([1.0])))


def test_tail_density_is_normalized():
    model = hist_fit(DATA, 1.0, origin=0.0)
    region = TailRegion(u=np.array([1.0]), u0=np.array([0.0]))
    tail = hist_tail_density(model, region, points=64)
    assert tail.normalizer == pytest.approx(1.0 / 3.0)
    assert tail.density(np.array([[1.5]]))[0] == pytest.approx(1.0)
    assert tail.grid.integrate() == pytest.approx(1.0, abs=1e-2)
    assert tail.estimator_id == "hist"


def test_empty_tail_raises():
    region = TailRegion(u=np.array([5.0]), u0=np.array([0.0]))
    with pytest.raises(DataError):
        fit_tail_histogram(DATA, region)


def test_bivariate_tail_histogram(bilogistic_sample):
    u = np.quantile(bilogistic_sample.values, 0.8, axis=0)
    region = TailRegion(u=u, u0=u - 1.0)
    tail = fit_tail_histogram(bilogistic_sample, region, points=60)
    assert tail.d == 2
    assert tail.grid.integrate() == pytest.approx(1.0, abs=0.1)
