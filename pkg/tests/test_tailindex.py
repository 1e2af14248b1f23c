import numpy as np
import pytest

from tailkde.core.data import DataMatrix, TailRegion
from tailkde.core.errors import ConfigError, DataError, EstimationError
from tailkde.core.rng import RngStream
from tailkde.models.enums import IndexKind, Loss, index_kind
from tailkde.services.kde import FunctionDensity, tail_from_density
from tailkde.services.sampling import sample, univariate_targets
from tailkde.services.tailindex import (
    data_vs_data_index,
    fit_modeled_tail,
    own_offset,
    select_model,
    tail_index,
    threshold_region,
)

REGION = TailRegion(u=np.array([1.0]), u0=np.array([0.0]))


def shifted_exponential(rate):
    def density(points):
        t = points[:, 0] - 1.0
        return np.where(t > 0, rate * np.exp(-rate * np.maximum(t, 0.0)), 0.0)
    return FunctionDensity(density)


@pytest.fixture
def reference():
    # Exp(1) 密度在 (1, ∞) 上的尾部
    base = FunctionDensity(lambda p: np.exp(-p[:, 0]))
    return tail_from_density(base, REGION, np.array([20.0]), points=2048, estimator_id="kpi")


def test_index_of_reference_against_itself(reference):
    assert tail_index(reference, reference).value == pytest.approx(0.0, abs=1e-12)


def test_l2_index(reference):
    report = tail_index(shifted_exponential(2.0), reference, Loss.L2, name="exp2")
    # ∫(e^{-t} - 2e^{-2t})² dt = 1/2 + 1 - 4/3
    assert report.value == pytest.approx(1.0 / 6.0, rel=0.03)
    assert report.index_kind == IndexKind.TRANSFORMATION_L2
    assert report.candidate == "exp2"
    assert report.grid["lower"] == [1.0]


def test_l1_index(reference):
    report = tail_index(shifted_exponential(2.0), reference, Loss.L1)
    assert report.value == pytest.approx(0.5, abs=0.02)


def test_non_finite_candidate(reference):
    bad = FunctionDensity(lambda p: np.full(p.shape[0], np.nan))
    with pytest.raises(EstimationError):
        tail_index(bad, reference)


def test_selection_picks_smallest_index(reference):
    result = select_model([("exp2", shifted_exponential(2.0)), ("exp1", shifted_exponential(1.0))], reference)
    assert result.winner == 1
    assert result.winner_name == "exp1"
    assert not result.tie
    assert [r.candidate for r in result.reports] == ["exp2", "exp1"]


def test_selection_tie_goes_to_first(reference):
    same = shifted_exponential(2.0)
    result = select_model([("a", same), ("b", same)], reference)
    assert result.tie
    assert result.winner_name == "a"


def test_selection_records_failures(reference):
    bad = FunctionDensity(lambda p: np.full(p.shape[0], np.inf))
    result = select_model([("bad", bad), ("exp2", shifted_exponential(2.0)), ("exp1", shifted_exponential(1.0))],
                          reference)
    assert "bad" in result.failures
    assert result.winner == 2


def test_selection_needs_two_candidates(reference):
    with pytest.raises(ConfigError):
        select_model([("exp1", shifted_exponential(1.0))], reference)
    bad = FunctionDensity(lambda p: np.full(p.shape[0], np.nan))
    with pytest.raises(EstimationError):
        select_model([("bad", bad), ("exp1", shifted_exponential(1.0))], reference)


@pytest.mark.parametrize("token,loss,kind", [
    ("hist", Loss.L2, "T~2"),
    ("hist", Loss.L1, "T~1"),
    ("kpi", Loss.L2, "T^2"),
    ("kpi*", Loss.L1, "T^*1"),
    ("gpd+", Loss.L2, "Tv2"),
])
def test_index_kinds(token, loss, kind):
    assert index_kind(token, loss).value == kind


class TestThresholds:
    def test_exactly_one_threshold_form(self, gumbel_sample):
        with pytest.raises(ConfigError):
            threshold_region(gumbel_sample, 0.9, [5.0])
        with pytest.raises(ConfigError):
            threshold_region(gumbel_sample)

    def test_absolute_threshold_is_broadcast(self, bilogistic_sample):
        region = threshold_region(bilogistic_sample, threshold=[3.0])
        np.testing.assert_array_equal(region.u, [3.0, 3.0])
        assert np.all(region.u0 < region.u)

    def test_offset_is_pushed_below_threshold(self):
        data = DataMatrix(np.array([0.0, 1.0, 2.0, 10.0]))
        u = np.array([-0.2])
        offset = own_offset(data, u)
        assert offset[0] == pytest.approx(-0.2 - 0.05 * 10.0)


class TestDataVsData:
    def test_identical_samples_score_zero(self, serial_settings, gumbel_sample):
        report = data_vs_data_index(gumbel_sample, gumbel_sample, "hist", quantile_level=0.9)
        assert report.value == pytest.approx(0.0, abs=1e-12)

    def test_different_sample_scores_positive(self, serial_settings, gumbel_sample):
        other = sample(univariate_targets()["gum"], 400, RngStream(4))
        report = data_vs_data_index(gumbel_sample, other, "hist", quantile_level=0.9, name="other")
        assert report.value > 0
        assert report.candidate == "other"

    def test_modeled_sample_without_tail(self, gumbel_sample):
        region = threshold_region(gumbel_sample, quantile_level=0.9)
        modeled = DataMatrix(np.linspace(-5.0, -1.0, 30))
        with pytest.raises(DataError):
            fit_modeled_tail(modeled, "hist", region)

    def test_dimension_mismatch(self, gumbel_sample, bilogistic_sample):
        with pytest.raises(DataError):
            data_vs_data_index(gumbel_sample, bilogistic_sample, "hist", quantile_level=0.9)
