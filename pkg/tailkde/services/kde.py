"""
标准核密度估计、对数变换核密度估计, 以及阈值以上尾部密度的归一化
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol, Tuple

import numpy as np
from scipy.linalg import solve_triangular
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from ..core.config import settings
from ..core.data import BandwidthMatrix, DataMatrix, TailRegion
from ..core.errors import DataError, EstimationError
from ..core.grid import DensityGrid, default_upper, make_grid
from ..core.logging import logger
from ..models.enums import KdeKind, Space
from .transform import LogTransform, fit_transform

# 尾部质量低于此值视为空尾部
MIN_TAIL_MASS = 1e-6

_fit_calls = {"count": 0}


def fit_count() -> int:
    """fit_kde 的累计调用次数(用于验证阈值变更不触发重新拟合)"""
    return _fit_calls["count"]


class Density(Protocol):
    """可在点集上求值的密度"""

    d: int

    def density(self, points: np.ndarray) -> np.ndarray:
        ...


@dataclass(frozen=True, eq=False)
class KdeModel:
    """
    拟合后的核密度估计

    标准核: data 位于原始空间, 直接求和;
    变换核: data 为 Y = t(X), 原始尺度上的密度为 |J_t(x)| f̂_Y(t(x))。
    """

    data: DataMatrix
    H: BandwidthMatrix
    kind: KdeKind = KdeKind.STANDARD
    transform: Optional[LogTransform] = None
    _whitened: np.ndarray = field(init=False, repr=False)
    _chol: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.H.d != self.data.d:
            raise DataError(f"bandwidth has dimension {self.H.d}, data has {self.data.d}")
        if self.kind == KdeKind.TRANSFORMATION:
            if self.transform is None or self.data.space != Space.TRANSFORMED:
                raise DataError("transformation kernel needs a transform and transformed data")
        chol = self.H.cholesky()
        object.__setattr__(self, "_chol", chol)
        object.__setattr__(self, "_whitened", solve_triangular(chol, self.data.values.T, lower=True).T)

    @property
    def d(self) -> int:
        return self.data.d

    @property
    def n(self) -> int:
        return self.data.n

    def original_data(self) -> DataMatrix:
        if self.kind == KdeKind.TRANSFORMATION:
            return DataMatrix(self.transform.inverse(self.data.values), columns=self.data.columns)
        return self.data

    def _log_norm(self) -> float:
        return float(np.sum(np.log(np.diag(self._chol))) + 0.5 * self.d * np.log(2.0 * np.pi))

    def kernel_sum(self, points: np.ndarray) -> np.ndarray:
        """
        n⁻¹ Σ K_H(p - data_i), p 与 data 处于同一空间

        n 不超过 DIRECT_SUM_MAX_N 时逐对精确求和;
        否则只累加白化距离在 KERNEL_CUTOFF_SD 以内的样本点。
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[0] == 0:
            return np.zeros(0)
        query = solve_triangular(self._chol, points.T, lower=True).T
        scale = np.exp(-self._log_norm()) / self.n

        if self.n <= settings.DIRECT_SUM_MAX_N:
            block = max(1, (1 << 22) // self.n)
            out = np.empty(query.shape[0])
            for start in range(0, query.shape[0], block):
                sq = cdist(query[start:start + block], self._whitened, "sqeuclidean")
                out[start:start + block] = np.exp(-0.5 * sq).sum(axis=1)
            return out * scale

        # 截断核: 6 个标准差之外的贡献 < exp(-18), 相对误差远小于 1e-8
        tree = cKDTree(self._whitened)
        neighbours = tree.query_ball_point(query, r=settings.KERNEL_CUTOFF_SD)
        out = np.zeros(query.shape[0])
        for idx, members in enumerate(neighbours):
            if members:
                sq = np.sum((self._whitened[members] - query[idx]) ** 2, axis=1)
                out[idx] = np.exp(-0.5 * sq).sum()
        return out * scale

    def density(self, points: np.ndarray) -> np.ndarray:
        """原始尺度上的密度; 变换核在 u0 及以下返回 0"""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == KdeKind.STANDARD:
            return self.kernel_sum(points)
        out = np.zeros(points.shape[0])
        inside = self.transform.in_domain(points)
        if np.any(inside):
            x = points[inside]
            out[inside] = self.transform.jacobian(x) * self.kernel_sum(self.transform.forward(x))
        return out


def fit_kde(data: DataMatrix, H: BandwidthMatrix, kind: KdeKind = KdeKind.TRANSFORMATION,
            transform: Optional[LogTransform] = None) -> KdeModel:
    """
    构造核估计

    Args:
        data: 原始空间样本
        H: 带宽矩阵(变换核为对数空间中的带宽)
        kind: 标准核或变换核
        transform: 变换核使用的对数变换，为None时使用默认偏移

    Returns:
        KdeModel: 拟合结果
    """
    _fit_calls["count"] += 1
    if kind == KdeKind.STANDARD:
        return KdeModel(data=data, H=H, kind=kind)
    transform = transform or fit_transform(data)
    return KdeModel(data=transform.apply(data), H=H, kind=kind, transform=transform)


def kde_eval(model: KdeModel, x) -> float:
    """
    单点求值

    Raises:
        DataError: 变换核的 x 不在 (u0, ∞)^d 内
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if model.kind == KdeKind.TRANSFORMATION and not model.transform.in_domain(x)[0]:
        raise DataError("evaluation point lies outside the transform domain")
    return float(model.density(x[None, :])[0])


def integrate_upper(density: Callable[[np.ndarray], np.ndarray], region: TailRegion, upper: np.ndarray,
                    points: Optional[int] = None) -> Tuple[float, DensityGrid]:
    """
    在 (u, upper] 上积分密度, 上界按倍增扩展直到质量增量小于 SURVIVAL_TOL

    Returns:
        Tuple[float, DensityGrid]: 积分值和最后一次使用的(带未归一化密度值的)网格
    """
    upper = np.maximum(np.asarray(upper, dtype=float), region.u + 1e-8 * np.maximum(1.0, np.abs(region.u)))
    grid = make_grid(region, upper, points)
    values = density(grid.points())
    mass = grid.integrate(values)
    for _ in range(settings.GRID_MAX_EXTENSIONS):
        wider = make_grid(region, region.u + 2.0 * (upper - region.u), points)
        wider_values = density(wider.points())
        wider_mass = wider.integrate(wider_values)
        added = abs(wider_mass - mass)
        grid, values, mass, upper = wider, wider_values, wider_mass, wider.upper
        if added < settings.SURVIVAL_TOL:
            break
    else:
        logger.warning(f"积分上界扩展 {settings.GRID_MAX_EXTENSIONS} 次后仍未收敛, mass={mass:.6g}")
    return mass, grid.with_values(np.maximum(values, 0.0))


def _check_region(model: KdeModel, region: TailRegion) -> None:
    if region.d != model.d:
        raise DataError(f"region has dimension {region.d}, model has {model.d}")
    if model.kind == KdeKind.TRANSFORMATION and np.any(region.u <= model.transform.u0):
        raise DataError("threshold lies at or below the transform offset")


def tail_upper(data: DataMatrix, region: TailRegion) -> np.ndarray:
    """尾部网格的初始上界: 不低于默认上界, 且至少高出阈值 GRID_UPPER_SD 倍标准差"""
    upper = default_upper(data)
    spread = data.values.std(axis=0, ddof=1) if data.n > 1 else np.ones(data.d)
    spread = np.where(spread > 0, spread, 1.0)
    return np.maximum(upper, region.u + settings.GRID_UPPER_SD * spread)


def survival_estimate(model: KdeModel, region: TailRegion, points: Optional[int] = None) -> float:
    """
    F̄(u) 的估计: f̂ 在 (u, ∞)^d 上的积分

    Args:
        model: 核估计
        region: 尾部区域
        points: 每轴网格节点数

    Returns:
        float: 估计的尾部质量

    Raises:
        DataError: 阈值低于变换偏移
    """
    _check_region(model, region)
    mass, _ = integrate_upper(model.density, region, tail_upper(model.original_data(), region), points)
    return mass


@dataclass(frozen=True, eq=False)
class TailDensityModel:
    """
    尾部密度 f(x) / F̄(u), 仅在 (u, ∞)^d 上非零

    grid 保存了计算归一化常数时使用的网格及尾部密度值, 下游指标直接复用。
    """

    base: Density
    region: TailRegion
    normalizer: float
    grid: DensityGrid
    estimator_id: str = ""
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 < self.normalizer <= 1 + 1e-6:
            raise EstimationError(f"tail normalizer {self.normalizer} outside (0, 1]")

    @property
    def d(self) -> int:
        return self.region.d

    def density(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros(points.shape[0])
        inside = np.all(points > self.region.u, axis=1)
        if np.any(inside):
            out[inside] = self.base.density(points[inside]) / self.normalizer
        return out

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return self.density(points)


def tail_from_density(base: Density, region: TailRegion, upper: np.ndarray, points: Optional[int] = None,
                      estimator_id: str = "", normalizer: Optional[float] = None, **details) -> TailDensityModel:
    """
    由任意密度构造尾部密度

    normalizer 为None时使用网格积分(此时网格上的尾部密度积分恰为 1);
    否则使用给定的(例如解析的)生存概率。
    """
    mass, grid = integrate_upper(base.density, region, upper, points)
    if mass <= MIN_TAIL_MASS:
        raise DataError(f"vanishing tail mass {mass:.3g} above the threshold")
    norm = mass if normalizer is None else normalizer
    tail_grid = grid.with_values(grid.values / norm, estimator_id=estimator_id)
    return TailDensityModel(base=base, region=region, normalizer=float(norm), grid=tail_grid,
                            estimator_id=estimator_id, details=details)


def tail_density(model: KdeModel, region: TailRegion, points: Optional[int] = None,
                 estimator_id: str = "") -> TailDensityModel:
    """
    核估计的尾部密度

    更换阈值只需对同一个 model 再次调用, 不会重新拟合。

    Raises:
        DataError: 阈值以上质量不足 1e-6
    """
    _check_region(model, region)
    upper = tail_upper(model.original_data(), region)
    tail = tail_from_density(model, region, upper, points, estimator_id=estimator_id)
    logger.debug(f"尾部归一化常数 u={region.u.tolist()} F̄={tail.normalizer:.6g}")
    return tail


@dataclass(frozen=True)
class FunctionDensity:
    """把 numpy 向量化函数包装成 Density"""

    func: Callable[[np.ndarray], np.ndarray]
    d: int = 1

    def density(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(self.func(np.atleast_2d(points)), dtype=float).reshape(-1)


def tail_quantile(model: TailDensityModel, p: float) -> float:
    """
    一元尾部密度的分位数: 对网格上的累积梯形积分做单调插值

    Raises:
        DataError: d > 1 或 p 不在 (0,1) 内
    """
    if model.d != 1:
        raise DataError("tail quantiles are only defined for d = 1")
    if not 0 < p < 1:
        raise DataError(f"probability {p} must lie strictly between 0 and 1")
    x = model.grid.axes[0]
    values = model.grid.values
    cumulative = np.concatenate([[0.0], np.cumsum(0.5 * (values[1:] + values[:-1]) * np.diff(x))])
    cumulative /= cumulative[-1]
    return float(np.interp(p, cumulative, x))
