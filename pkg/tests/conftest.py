import numpy as np
import pytest

from tailkde.core.config import settings
from tailkde.core.data import DataMatrix
from tailkde.core.rng import RngStream
from tailkde.services.sampling import bivariate_targets, sample, univariate_targets


@pytest.fixture
def rng():
    return RngStream(seed=12345, stream_id=0)


@pytest.fixture
def normal_1d(rng):
    return DataMatrix(rng.generator().normal(size=(300, 1)))


@pytest.fixture
def normal_2d(rng):
    cov = np.array([[1.0, 0.5], [0.5, 2.0]])
    return DataMatrix(rng.generator().multivariate_normal(np.zeros(2), cov, size=150))


@pytest.fixture
def gumbel_sample(rng):
    return sample(univariate_targets()["gum"], 400, rng)


@pytest.fixture
def bilogistic_sample(rng):
    return sample(bivariate_targets()["bil"], 300, rng)


@pytest.fixture
def sample_csv(tmp_path, gumbel_sample):
    path = tmp_path / "sample.csv"
    lines = ["x1"] + [repr(float(v)) for v in gumbel_sample.values[:, 0]]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def serial_settings(monkeypatch):
    """单进程运行, 并缩小网格以加快测试"""
    monkeypatch.setattr(settings, "THREADS", 1)
    monkeypatch.setattr(settings, "GRID_POINTS_1D", 128)
    monkeypatch.setattr(settings, "GRID_POINTS_2D", 40)
    return settings
