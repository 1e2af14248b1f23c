from itertools import product

import numpy as np
import pytest

from tailkde.core.data import BandwidthMatrix, DataMatrix
from tailkde.core.errors import DataError
from tailkde.models.enums import SelectorKind
from tailkde.services.bandwidth import (
    PairSums,
    ns_bandwidth,
    ns_constant,
    pilot_bandwidth,
    psi4_estimate,
    scv_objective,
    scv_pair_summand,
    select_bandwidth,
    ucv_objective,
)
from tailkde.services.kernels import GaussianKernel, deriv4_vector, gaussian_density
from tailkde.services.optimizer import from_params, optimize_pd, to_params

SMALL = np.array([[0.0, 0.1], [0.5, -0.3], [1.2, 0.4], [-0.7, 0.9], [0.3, 0.2]])


def test_normal_scale_bandwidth(normal_1d):
    result = ns_bandwidth(normal_1d)
    expected = (4.0 / (3.0 * normal_1d.n)) ** 0.4 * normal_1d.covariance()
    np.testing.assert_allclose(result.H.H, expected)
    assert result.selector == SelectorKind.NS
    assert ns_constant(100, 2) == pytest.approx((4.0 / 400.0) ** (1.0 / 3.0))


def test_singular_covariance():
    with pytest.raises(DataError, match="singular"):
        ns_bandwidth(DataMatrix(np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])))


def test_too_few_observations():
    with pytest.raises(DataError):
        ns_bandwidth(DataMatrix(np.array([[0.0, 1.0], [1.0, 0.0]])))


def test_psi4_matches_double_sum():
    data = DataMatrix(SMALL)
    G = pilot_bandwidth(data)
    brute = np.zeros(16)
    for i, j in product(range(data.n), repeat=2):
        brute += deriv4_vector(G, SMALL[i] - SMALL[j])
    np.testing.assert_allclose(psi4_estimate(data, G), brute / data.n ** 2, rtol=1e-10, atol=1e-14)


def test_ucv_matches_double_sum():
    data = DataMatrix(SMALL)
    H = BandwidthMatrix(np.array([[0.2, 0.05], [0.05, 0.15]]))
    n = data.n
    off_2h = off_h = 0.0
    for i, j in product(range(n), repeat=2):
        if i != j:
            delta = (SMALL[i] - SMALL[j])[None, :]
            off_2h += gaussian_density(delta, H.scaled(2.0))[0]
            off_h += gaussian_density(delta, H)[0]
    expected = (GaussianKernel(2).roughness / (n * np.sqrt(H.det)) + off_2h / n ** 2
                - 2.0 * off_h / (n * (n - 1)))
    assert ucv_objective(PairSums(data), H) == pytest.approx(expected)


def test_scv_with_dirac_pilot_equals_ucv():
    data = DataMatrix(SMALL)
    pairs = PairSums(data)
    H = BandwidthMatrix.from_scalar(0.4, 2)
    assert scv_objective(pairs, H, BandwidthMatrix.zeros(2)) == pytest.approx(ucv_objective(pairs, H))


def test_scv_matches_all_pairs_sum():
    data = DataMatrix(SMALL)
    H = BandwidthMatrix(np.array([[0.2, 0.05], [0.05, 0.15]]))
    G = pilot_bandwidth(data)
    n = data.n
    # i = j 的对角项也计入
    total = sum(scv_pair_summand(H, G, SMALL[i] - SMALL[j]) for i, j in product(range(n), repeat=2))
    expected = GaussianKernel(2).roughness / (n * np.sqrt(H.det)) + total / n ** 2
    pairs = PairSums(data)
    assert scv_objective(pairs, H, G) == pytest.approx(expected, rel=1e-12)


def test_scv_pair_summand_with_dirac_pilot():
    H = BandwidthMatrix.from_scalar(0.4, 2)
    delta = np.array([0.3, -0.2])
    expected = gaussian_density(delta[None, :], H.scaled(2.0))[0] - 2.0 * gaussian_density(delta[None, :], H)[0]
    assert scv_pair_summand(H, BandwidthMatrix.zeros(2), delta) == pytest.approx(expected)


def test_parameterization_round_trip():
    H = BandwidthMatrix(np.array([[0.5, 0.1], [0.1, 0.3]]))
    np.testing.assert_allclose(from_params(to_params(H), 2).H, H.H)
    diag = from_params(np.array([0.1, -0.2]), 2, diag=True)
    assert diag.H[0, 1] == 0.0


def test_optimizer_finds_quadratic_minimum():
    target = np.array([[0.4, 0.1], [0.1, 0.2]])
    H, trace = optimize_pd(lambda M: float(np.sum((M.H - target) ** 2)), BandwidthMatrix(np.eye(2)))
    np.testing.assert_allclose(H.H, target, atol=1e-4)
    assert trace.converged
    assert trace.final_value <= trace.start_value


def test_plugin_selector_near_normal_scale(normal_1d):
    result = select_bandwidth(normal_1d, SelectorKind.PI)
    ratio = result.H.H[0, 0] / ns_bandwidth(normal_1d).H.H[0, 0]
    assert 0.5 < ratio < 2.0
    assert result.pilot_G is not None
    assert result.converged


def test_diagonal_search_stays_diagonal(normal_2d):
    result = select_bandwidth(normal_2d, SelectorKind.PI, diag=True)
    assert result.H.H[0, 1] == 0.0


@pytest.mark.parametrize("selector", [SelectorKind.UCV, SelectorKind.SCV])
def test_small_samples_fall_back_to_normal_scale(selector):
    data = DataMatrix(np.linspace(0.0, 1.0, 10) ** 2)
    result = select_bandwidth(data, selector)
    assert result.fallback is not None
    np.testing.assert_allclose(result.H.H, ns_bandwidth(data).H.H)


@pytest.mark.slow
@pytest.mark.parametrize("selector", [SelectorKind.UCV, SelectorKind.SCV])
def test_cross_validation_selectors(selector, normal_1d):
    result = select_bandwidth(normal_1d, selector)
    assert result.H.H[0, 0] > 0
    assert np.isfinite(result.objective_value)
