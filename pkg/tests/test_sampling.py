import numpy as np
import pytest

from tailkde.core.errors import ConfigError
from tailkde.core.rng import RngStream
from tailkde.models.enums import BivariateFamily, UnivariateFamily
from tailkde.services.sampling import (
    TargetSpec,
    bivariate_targets,
    conditional_log_survival,
    sample,
    sample_bivariate,
    sample_univariate,
    univariate_targets,
)


def test_target_rosters():
    assert list(univariate_targets()) == ["fre", "gum", "gpd"]
    targets = bivariate_targets("evd")
    assert list(targets) == ["bil", "anl", "hr"]
    assert targets["hr"].params["lam"] == pytest.approx(1.0 / 2.4)
    assert targets["anl"].params == {"r": 1.3, "theta1": 0.2, "theta2": 0.7}
    assert bivariate_targets("literal")["hr"].params["lam"] == 2.4


def test_labels_and_dimensions():
    assert univariate_targets()["gum"].label == "gum"
    assert univariate_targets()["gum"].d == 1
    assert bivariate_targets()["bil"].d == 2


def test_unknown_family():
    with pytest.raises(ConfigError, match="unknown target family"):
        TargetSpec("weibull", {"mu": 0.0, "sigma": 1.0})


def test_missing_parameter():
    with pytest.raises(ConfigError, match="missing parameter"):
        TargetSpec(UnivariateFamily.GUMBEL, {"mu": 0.0})


def test_same_stream_same_sample():
    spec = univariate_targets()["gpd"]
    a = sample(spec, 50, RngStream(1, 4))
    b = sample(spec, 50, RngStream(1, 4))
    np.testing.assert_array_equal(a.values, b.values)


def test_univariate_quantile_matches_model():
    data = sample_univariate(univariate_targets()["gum"], 20000, RngStream(2))
    assert np.quantile(data.values, 0.95) == pytest.approx(10.411, abs=0.3)


def test_dimension_checks():
    with pytest.raises(ConfigError):
        sample_univariate(bivariate_targets()["hr"], 10, RngStream(0))
    with pytest.raises(ConfigError):
        sample_bivariate(univariate_targets()["gum"], 10, RngStream(0))
    with pytest.raises(ConfigError):
        sample(univariate_targets()["gum"], 0, RngStream(0))


@pytest.mark.parametrize("label", ["bil", "anl", "hr"])
def test_bivariate_margins_are_unit_frechet(label):
    data = sample(bivariate_targets()[label], 5000, RngStream(9))
    assert data.d == 2
    for j in range(2):
        assert np.mean(data.values[:, j] <= 1.0) == pytest.approx(np.exp(-1.0), abs=0.03)


@pytest.mark.parametrize("label", ["bil", "anl", "hr"])
def test_bivariate_joint_distribution(label):
    spec = bivariate_targets()[label]
    data = sample(spec, 5000, RngStream(10))
    point = np.array([2.0, 2.0])
    empirical = np.mean(np.all(data.values <= point, axis=1))
    assert empirical == pytest.approx(spec.model().cdf(point[None, :])[0], abs=0.03)


@pytest.mark.parametrize("family,params", [
    (BivariateFamily.BILOGISTIC, {"alpha": 0.8, "beta": 0.52}),
    (BivariateFamily.HUSLER_REISS, {"lam": 0.5}),
])
def test_conditional_survival_is_decreasing(family, params):
    y2 = np.exp(np.linspace(-8.0, 8.0, 200))
    y1 = np.full_like(y2, 0.8)
    log_s = conditional_log_survival(family, params, y1, y2)
    assert np.all(np.diff(log_s) <= 1e-12)
    assert log_s[0] == pytest.approx(0.0, abs=1e-2)
