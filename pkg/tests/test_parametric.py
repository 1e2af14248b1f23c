import numpy as np
import pytest

from tailkde.core.data import DataMatrix
from tailkde.core.errors import ConfigError, DataError
from tailkde.core.rng import RngStream
from tailkde.models.enums import BivariateFamily, UnivariateFamily
from tailkde.services.parametric.bivariate import (
    BivariateEvdFit,
    bivariate_density,
    dependence_from_convention,
    exponential_to_gev,
    fit_bivariate,
    gev_to_exponential,
)
from tailkde.services.parametric.pickands import exponent_measure, pickands, pickands_all
from tailkde.services.parametric.univariate import (
    UnivariateEvtFit,
    deviance_gumbel_vs_frechet,
    fit_univariate,
)
from tailkde.services.sampling import bivariate_targets, sample, univariate_targets

FAMILIES = {
    BivariateFamily.BILOGISTIC: {"alpha": 0.8, "beta": 0.52},
    BivariateFamily.ANL: {"r": 1.3, "theta1": 0.2, "theta2": 0.7},
    BivariateFamily.HUSLER_REISS: {"lam": 1.0 / 2.4},
}


class TestUnivariateModels:
    def test_gumbel_quantile(self):
        assert univariate_targets()["gum"].model().quantile(0.95) == pytest.approx(10.411, abs=1e-3)

    def test_frechet_quantile(self):
        assert univariate_targets()["fre"].model().quantile(0.95) == pytest.approx(2.0507, abs=1e-4)

    def test_gpd_quantile(self):
        expected = (0.05 ** -0.25 - 1.0) / 0.25
        assert univariate_targets()["gpd"].model().quantile(0.95) == pytest.approx(expected)

    def test_frechet_needs_positive_shape(self):
        with pytest.raises(DataError):
            UnivariateEvtFit(UnivariateFamily.FRECHET, 1.0, 0.5, -0.1)

    def test_tail_is_normalized_above_threshold(self):
        model = univariate_targets()["gum"].model()
        tail = model.tail(10.0)
        assert tail.normalizer == pytest.approx(float(model.survival(10.0)))
        x = np.array([[9.0], [12.0]])
        values = tail.density(x)
        assert values[0] == 0.0
        assert values[1] == pytest.approx(model.density(x[1:])[0] / tail.normalizer)


class TestUnivariateFits:
    def test_gumbel_fit_recovers_parameters(self, gumbel_sample):
        fit = fit_univariate(gumbel_sample, UnivariateFamily.GUMBEL)
        assert fit.mu == pytest.approx(1.5, abs=0.6)
        assert fit.sigma == pytest.approx(3.0, abs=0.6)
        assert np.isfinite(fit.loglik)

    def test_exceedance_gpd_uses_threshold_as_location(self, gumbel_sample):
        u = float(np.quantile(gumbel_sample.values, 0.8))
        fit = fit_univariate(gumbel_sample, UnivariateFamily.GPD, threshold=u)
        assert fit.mu == u
        assert fit.exceedance
        assert fit.n == int(np.sum(gumbel_sample.values[:, 0] > u))

    def test_full_sample_gpd_covers_all_observations(self, gumbel_sample):
        fit = fit_univariate(gumbel_sample, UnivariateFamily.GPD)
        assert fit.mu < gumbel_sample.values.min()

    def test_frechet_fit_is_valid(self):
        data = sample(univariate_targets()["fre"], 500, RngStream(3))
        fit = fit_univariate(data, UnivariateFamily.FRECHET)
        assert fit.xi > 0
        assert fit.mu < data.values.min()

    def test_too_few_observations(self):
        with pytest.raises(DataError, match="at least 10"):
            fit_univariate(DataMatrix(np.arange(5.0)), UnivariateFamily.GUMBEL)

    def test_constant_sample(self):
        with pytest.raises(DataError, match="degenerate"):
            fit_univariate(DataMatrix(np.ones(20)), UnivariateFamily.GUMBEL)

    def test_wrong_dimension(self, bilogistic_sample):
        with pytest.raises(DataError):
            fit_univariate(bilogistic_sample, UnivariateFamily.GUMBEL)


class TestDeviance:
    def test_heavy_tail_selects_frechet(self):
        data = sample(univariate_targets()["fre"], 2000, RngStream(11))
        result = deviance_gumbel_vs_frechet(data)
        assert result.use_frechet
        assert result.xi > 0
        assert result.pvalue < 0.05

    def test_decision_is_consistent(self, gumbel_sample):
        result = deviance_gumbel_vs_frechet(gumbel_sample, level=0.05)
        assert result.statistic >= 0
        assert 0 <= result.pvalue <= 1
        assert result.use_frechet == (result.pvalue < 0.05 and result.xi > 0)
        assert result.gev.loglik >= result.gumbel.loglik - 1e-6


class TestPickands:
    @pytest.mark.parametrize("family", list(FAMILIES))
    def test_endpoints_and_bounds(self, family):
        params = FAMILIES[family]
        w = np.linspace(0.0, 1.0, 101)
        A = pickands(family, params, w)
        assert A[0] == 1.0 and A[-1] == 1.0
        assert np.all(A <= 1.0 + 1e-12)
        assert np.all(A >= np.maximum(w, 1.0 - w) - 1e-12)

    @pytest.mark.parametrize("family", list(FAMILIES))
    def test_derivatives_match_finite_differences(self, family):
        params = FAMILIES[family]
        w = np.array([0.2, 0.45, 0.8])
        step = 1e-5
        _, dA, d2A = pickands_all(family, params, w)
        A_plus = pickands(family, params, w + step)
        A_minus = pickands(family, params, w - step)
        np.testing.assert_allclose(dA, (A_plus - A_minus) / (2 * step), rtol=1e-5, atol=1e-7)
        dA_plus = pickands_all(family, params, w + step)[1]
        dA_minus = pickands_all(family, params, w - step)[1]
        np.testing.assert_allclose(d2A, (dA_plus - dA_minus) / (2 * step), rtol=1e-4, atol=1e-6)

    @pytest.mark.parametrize("family", list(FAMILIES))
    def test_convexity(self, family):
        d2A = pickands_all(family, FAMILIES[family], np.linspace(0.01, 0.99, 50))[2]
        assert np.all(d2A >= 0)

    def test_exponent_measure_is_homogeneous(self):
        params = FAMILIES[BivariateFamily.HUSLER_REISS]
        v1 = exponent_measure(BivariateFamily.HUSLER_REISS, params, 0.7, 1.9)
        v2 = exponent_measure(BivariateFamily.HUSLER_REISS, params, 2.1, 5.7)
        assert v2 == pytest.approx(3.0 * v1)

    def test_invalid_parameters(self):
        with pytest.raises(ConfigError):
            pickands(BivariateFamily.BILOGISTIC, {"alpha": 1.2, "beta": 0.5}, 0.5)
        with pytest.raises(ConfigError):
            pickands(BivariateFamily.HUSLER_REISS, {"lam": -1.0}, 0.5)


class TestBivariateModel:
    def test_unit_frechet_margin(self):
        model = BivariateEvdFit(BivariateFamily.HUSLER_REISS, {"lam": 0.5})
        assert model.margin_cdf(0, 1.0) == pytest.approx(np.exp(-1.0))
        assert model.margin_cdf(1, 4.0) == pytest.approx(np.exp(-0.25))

    def test_margin_transform_round_trip(self):
        x = np.array([0.5, 2.0, 7.0])
        y, _ = gev_to_exponential(x, 0.2, 1.3, 0.3)
        np.testing.assert_allclose(exponential_to_gev(y, 0.2, 1.3, 0.3), x)

    @pytest.mark.parametrize("family", list(FAMILIES))
    def test_density_is_mixed_partial_of_cdf(self, family):
        model = BivariateEvdFit(family, FAMILIES[family])
        x1, x2, h = 2.0, 3.0, 1e-3
        cdf = lambda a, b: model.cdf(np.array([[a, b]]))[0]  # noqa: E731
        numeric = (cdf(x1 + h, x2 + h) - cdf(x1 + h, x2 - h) - cdf(x1 - h, x2 + h) + cdf(x1 - h, x2 - h)) / (4 * h * h)
        assert bivariate_density(model, [x1, x2]) == pytest.approx(numeric, rel=1e-4)

    @pytest.mark.parametrize("family", list(FAMILIES))
    def test_joint_survival_bounds(self, family):
        model = BivariateEvdFit(family, FAMILIES[family])
        joint = model.survival([5.0, 5.0])
        marginal = 1.0 - np.exp(-1.0 / 5.0)
        assert 0.0 < joint <= marginal + 1e-12

    def test_point_outside_support(self):
        model = BivariateEvdFit(BivariateFamily.HUSLER_REISS, {"lam": 0.5})
        with pytest.raises(DataError):
            bivariate_density(model, [-1.0, 2.0])

    def test_dependence_conventions(self):
        assert dependence_from_convention(BivariateFamily.HUSLER_REISS, 2.4, "evd") == {"lam": pytest.approx(1 / 2.4)}
        assert dependence_from_convention(BivariateFamily.HUSLER_REISS, 2.4, "literal") == {"lam": 2.4}
        assert dependence_from_convention(BivariateFamily.ANL, 1.3, "evd") == {"r": 1.3}
        with pytest.raises(ConfigError):
            dependence_from_convention(BivariateFamily.BILOGISTIC, 0.5)

    def test_fit_requires_bivariate_data(self, gumbel_sample):
        with pytest.raises(DataError):
            fit_bivariate(gumbel_sample, BivariateFamily.HUSLER_REISS)

    def test_fit_requires_enough_observations(self):
        with pytest.raises(DataError, match="at least 50"):
            fit_bivariate(DataMatrix(np.random.default_rng(0).uniform(1, 2, size=(20, 2))),
                          BivariateFamily.HUSLER_REISS)

    @pytest.mark.slow
    def test_fit_recovers_husler_reiss(self):
        data = sample(bivariate_targets()["hr"], 500, RngStream(5))
        fit = fit_bivariate(data, BivariateFamily.HUSLER_REISS, starts=1)
        assert fit.params["lam"] == pytest.approx(1.0 / 2.4, abs=0.2)
        for mu, sigma, xi in fit.margins:
            assert xi == pytest.approx(1.0, abs=0.3)
