"""
张量积求值网格与梯形求积
"""

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from .config import settings
from .data import DataMatrix, TailRegion
from .errors import DataError


def trapezoid_weights(axis: np.ndarray) -> np.ndarray:
    """一维梯形权重, 对任意节点间距精确积分仿射函数"""
    steps = np.diff(axis)
    weights = np.zeros_like(axis, dtype=float)
    weights[:-1] += steps / 2.0
    weights[1:] += steps / 2.0
    return weights


@dataclass(frozen=True, eq=False)
class DensityGrid:
    """
    张量积网格

    axes 为 d 个严格递增的坐标向量; weights 与 values 形状均为各轴长度的张量(行优先)。
    """

    axes: Tuple[np.ndarray, ...]
    weights: np.ndarray
    values: Optional[np.ndarray] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for axis in self.axes:
            if axis.ndim != 1 or axis.size < 2 or np.any(np.diff(axis) <= 0):
                raise DataError("grid axes must be strictly increasing with at least two nodes")
        if self.weights.shape != self.shape or np.any(self.weights <= 0):
            raise DataError("grid weights must be positive and match the axes")
        if self.values is not None:
            if self.values.shape != self.shape:
                raise DataError(f"grid values have shape {self.values.shape}, expected {self.shape}")
            if np.any(self.values < 0) or not np.all(np.isfinite(self.values)):
                raise DataError("grid values must be finite and non-negative")

    @property
    def d(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(axis.size for axis in self.axes)

    @property
    def lower(self) -> np.ndarray:
        return np.array([axis[0] for axis in self.axes])

    @property
    def upper(self) -> np.ndarray:
        return np.array([axis[-1] for axis in self.axes])

    @property
    def volume(self) -> float:
        return float(np.sum(self.weights))

    def points(self) -> np.ndarray:
        """所有网格节点, 形状 (N, d), 行优先顺序"""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])

    def integrate(self, values: Optional[np.ndarray] = None) -> float:
        """
        网格上的梯形积分

        Args:
            values: 节点上的函数值(张量或展平向量)，为None时使用网格自带的 values

        Returns:
            float: 积分近似值
        """
        if values is None:
            if self.values is None:
                raise DataError("grid carries no values to integrate")
            values = self.values
        values = np.asarray(values, dtype=float).reshape(self.shape)
        return float(np.sum(values * self.weights))

    def with_values(self, values: np.ndarray, **metadata) -> "DensityGrid":
        values = np.asarray(values, dtype=float).reshape(self.shape)
        return replace(self, values=values, metadata={**self.metadata, **metadata})

    def refined(self, factor: int = 2) -> "DensityGrid":
        """每个区间等分为 factor 段的加密网格(保留原有的对数/线性间距)"""
        axes = []
        for axis in self.axes:
            fine = [np.linspace(a, b, factor + 1)[:-1] for a, b in zip(axis[:-1], axis[1:])]
            fine.append(axis[-1:])
            axes.append(np.concatenate(fine))
        return grid_from_axes(axes, metadata=self.metadata)


def grid_from_axes(axes: Sequence[np.ndarray], metadata: Optional[dict] = None) -> DensityGrid:
    axes = tuple(np.asarray(axis, dtype=float) for axis in axes)
    weights = trapezoid_weights(axes[0])
    for axis in axes[1:]:
        weights = np.multiply.outer(weights, trapezoid_weights(axis))
    return DensityGrid(axes=axes, weights=np.asarray(weights), metadata=dict(metadata or {}))


def make_grid(
    region: TailRegion,
    upper: Sequence[float],
    points_per_axis: Optional[int] = None,
    spacing: Optional[str] = None,
) -> DensityGrid:
    """
    在 [u, upper] 上构建张量积网格

    Args:
        region: 尾部区域, 提供下界 u 和变换偏移 u0
        upper: 每个坐标的上界
        points_per_axis: 每轴节点数，为None时按维数取默认值
        spacing: "linear" 或 "log"（在 x - u0 上等距取对数），为None时使用配置

    Returns:
        DensityGrid: 带梯形权重的网格

    Raises:
        DataError: 上下界非有限或 upper <= u
    """
    lower = region.u
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    if upper.shape != lower.shape:
        raise DataError(f"upper bound has dimension {upper.size}, region has {lower.size}")
    if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
        raise DataError("grid bounds must be finite")
    if np.any(upper <= lower):
        raise DataError("grid upper bound must exceed the threshold in every coordinate")

    points = points_per_axis or settings.GRID_POINTS.get(region.d, settings.GRID_POINTS_3D)
    if points < 2:
        raise DataError("a grid axis needs at least two points")
    spacing = spacing or settings.GRID_SPACING

    axes = []
    for j in range(region.d):
        if spacing == "log":
            offset = region.u0[j]
            axis = offset + np.exp(np.linspace(np.log(lower[j] - offset), np.log(upper[j] - offset), points))
            axis[0], axis[-1] = lower[j], upper[j]
        else:
            axis = np.linspace(lower[j], upper[j], points)
        axes.append(axis)

    return grid_from_axes(axes, metadata={"spacing": spacing, "points_per_axis": points})


def default_upper(data: DataMatrix) -> np.ndarray:
    """默认积分上界: 每列最大值加 GRID_UPPER_SD 倍样本标准差"""
    values = data.values
    spread = values.std(axis=0, ddof=1) if data.n > 1 else np.zeros(data.d)
    spread = np.where(spread > 0, spread, 1.0)
    return values.max(axis=0) + settings.GRID_UPPER_SD * spread
