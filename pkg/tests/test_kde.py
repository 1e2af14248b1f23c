import numpy as np
import pytest
from scipy import stats

from tailkde.core.config import settings
from tailkde.core.data import BandwidthMatrix, DataMatrix, TailRegion
from tailkde.core.errors import DataError, EstimationError
from tailkde.models.enums import KdeKind
from tailkde.services.kde import (
    FunctionDensity,
    TailDensityModel,
    fit_count,
    fit_kde,
    kde_eval,
    survival_estimate,
    tail_density,
    tail_from_density,
    tail_quantile,
)
from tailkde.services.transform import LogTransform


def test_standard_kde_single_point():
    model = fit_kde(DataMatrix(np.array([0.0])), BandwidthMatrix.from_scalar(1.0), KdeKind.STANDARD)
    assert kde_eval(model, [0.0]) == pytest.approx(1.0 / np.sqrt(2.0 * np.pi))


def test_transformation_kde_single_point():
    h = 0.3
    transform = LogTransform(u0=np.array([0.0]))
    model = fit_kde(DataMatrix(np.array([1.0])), BandwidthMatrix.from_scalar(h), KdeKind.TRANSFORMATION, transform)
    assert kde_eval(model, [1.0]) == pytest.approx(1.0 / (h * np.sqrt(2.0 * np.pi)))
    x = 2.5
    expected = stats.norm.pdf(np.log(x), scale=h) / x
    assert kde_eval(model, [x]) == pytest.approx(expected)


def test_transformation_kde_is_zero_below_offset():
    transform = LogTransform(u0=np.array([0.0]))
    model = fit_kde(DataMatrix(np.array([1.0, 2.0])), BandwidthMatrix.from_scalar(0.3), KdeKind.TRANSFORMATION,
                    transform)
    assert model.density(np.array([[-1.0], [0.0]])).tolist() == [0.0, 0.0]
    with pytest.raises(DataError):
        kde_eval(model, [-1.0])


def test_original_data_round_trip():
    data = DataMatrix(np.array([1.0, 2.0, 4.0]))
    model = fit_kde(data, BandwidthMatrix.from_scalar(0.3))
    np.testing.assert_allclose(model.original_data().values, data.values)


def test_bandwidth_dimension_mismatch():
    with pytest.raises(DataError):
        fit_kde(DataMatrix(np.array([1.0, 2.0])), BandwidthMatrix.from_scalar(1.0, 2), KdeKind.STANDARD)


def test_fit_count_increments():
    start = fit_count()
    fit_kde(DataMatrix(np.array([0.0, 1.0])), BandwidthMatrix.from_scalar(1.0), KdeKind.STANDARD)
    assert fit_count() == start + 1


def test_truncated_sum_matches_direct_sum(monkeypatch, normal_2d):
    H = BandwidthMatrix(np.array([[0.3, 0.1], [0.1, 0.4]]))
    model = fit_kde(normal_2d, H, KdeKind.STANDARD)
    points = np.array([[0.0, 0.0], [1.0, -1.0], [2.5, 3.0]])
    direct = model.kernel_sum(points)
    monkeypatch.setattr(settings, "DIRECT_SUM_MAX_N", 10)
    np.testing.assert_allclose(model.kernel_sum(points), direct, rtol=1e-6)


def test_survival_of_standard_normal_kernel():
    model = fit_kde(DataMatrix(np.array([0.0])), BandwidthMatrix.from_scalar(1.0), KdeKind.STANDARD)
    region = TailRegion(u=np.array([0.0]), u0=np.array([-1.0]))
    assert survival_estimate(model, region, points=256) == pytest.approx(0.5, abs=1e-3)


def test_tail_density_integrates_to_one(normal_1d):
    model = fit_kde(normal_1d, BandwidthMatrix.from_scalar(0.3), KdeKind.STANDARD)
    region = TailRegion(u=np.array([1.0]), u0=np.array([-5.0]))
    tail = tail_density(model, region, points=128, estimator_id="kpi*")
    assert tail.grid.integrate() == pytest.approx(1.0)
    assert 0 < tail.normalizer < 1
    assert tail.density(np.array([[0.5]]))[0] == 0.0


def test_threshold_below_offset_rejected():
    data = DataMatrix(np.array([1.0, 2.0, 3.0]))
    model = fit_kde(data, BandwidthMatrix.from_scalar(0.3), transform=LogTransform(u0=np.array([0.5])))
    with pytest.raises(DataError, match="offset"):
        tail_density(model, TailRegion(u=np.array([0.5]), u0=np.array([0.0])))


def test_tail_quantile_of_exponential():
    density = FunctionDensity(lambda p: stats.expon.pdf(p[:, 0]))
    region = TailRegion(u=np.array([1.0]), u0=np.array([0.0]))
    tail = tail_from_density(density, region, upper=np.array([20.0]), points=512)
    assert tail.normalizer == pytest.approx(np.exp(-1.0), rel=1e-3)
    assert tail_quantile(tail, 0.5) == pytest.approx(1.0 + np.log(2.0), abs=1e-2)


def test_tail_quantile_rejects_bad_probability():
    density = FunctionDensity(lambda p: stats.expon.pdf(p[:, 0]))
    tail = tail_from_density(density, TailRegion(u=np.array([1.0]), u0=np.array([0.0])), np.array([20.0]), 64)
    with pytest.raises(DataError):
        tail_quantile(tail, 1.0)


def test_vanishing_tail_mass():
    density = FunctionDensity(lambda p: np.zeros(p.shape[0]))
    with pytest.raises(DataError, match="vanishing"):
        tail_from_density(density, TailRegion(u=np.array([1.0]), u0=np.array([0.0])), np.array([5.0]), 32)


def test_normalizer_above_one_rejected():
    density = FunctionDensity(lambda p: stats.expon.pdf(p[:, 0]))
    tail = tail_from_density(density, TailRegion(u=np.array([1.0]), u0=np.array([0.0])), np.array([20.0]), 64)
    with pytest.raises(EstimationError):
        TailDensityModel(base=density, region=tail.region, normalizer=2.0, grid=tail.grid)
