"""
多元直方图密度与尾部密度估计
"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from ..core.config import settings
from ..core.data import DataMatrix, TailRegion
from ..core.errors import DataError
from ..core.grid import DensityGrid, grid_from_axes
from .kde import TailDensityModel

# 判定点落在箱边界上的相对容差
EDGE_TOL = 1e-9


def ns_binwidth(tail_data: DataMatrix) -> np.ndarray:
    """
    正态尺度箱宽 b_j = 2·3^{1/(d+2)}·π^{d/(d+4)}·s_j·n^{-1/(d+2)}

    Args:
        tail_data: 尾部样本

    Returns:
        np.ndarray: 每个边缘的箱宽

    Raises:
        DataError: 样本少于 2 个或某个边缘为常数
    """
    if tail_data.n < 2:
        raise DataError("binwidth rule needs at least two tail observations")
    s = tail_data.std()
    if np.any(s <= 0):
        raise DataError("binwidth rule needs non-constant margins")
    n, d = tail_data.n, tail_data.d
    return 2.0 * 3.0 ** (1.0 / (d + 2.0)) * np.pi ** (d / (d + 4.0)) * s * n ** (-1.0 / (d + 2.0))


@dataclass(frozen=True, eq=False)
class HistogramModel:
    """
    规则超立方体划分上的直方图, 计数以稀疏字典保存

    箱为左闭右开区间 [origin + k b, origin + (k+1) b)。
    """

    origin: np.ndarray
    binwidths: np.ndarray
    counts: Dict[Tuple[int, ...], int]
    n: int
    _dense: np.ndarray = field(init=False, repr=False)
    _offset: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "origin", np.atleast_1d(np.asarray(self.origin, dtype=float)))
        object.__setattr__(self, "binwidths", np.atleast_1d(np.asarray(self.binwidths, dtype=float)))
        if np.any(self.binwidths <= 0):
            raise DataError("binwidths must be positive")
        if self.counts:
            keys = np.array(list(self.counts.keys()), dtype=int)
            offset = keys.min(axis=0)
            dense = np.zeros(tuple(keys.max(axis=0) - offset + 1))
            dense[tuple((keys - offset).T)] = list(self.counts.values())
        else:
            offset = np.zeros(self.d, dtype=int)
            dense = np.zeros((1,) * self.d)
        object.__setattr__(self, "_dense", dense)
        object.__setattr__(self, "_offset", offset)

    @property
    def d(self) -> int:
        return self.origin.size

    @property
    def bin_volume(self) -> float:
        return float(np.prod(self.binwidths))

    def total_mass(self) -> float:
        """∫ f̃ = Σ γ_i / n"""
        return float(sum(self.counts.values())) / self.n

    def _lookup(self, index: np.ndarray) -> np.ndarray:
        local = index - self._offset
        valid = np.all((local >= 0) & (local < np.array(self._dense.shape)), axis=1)
        out = np.zeros(index.shape[0])
        if np.any(valid):
            out[valid] = self._dense[tuple(local[valid].T)]
        return out

    def density(self, points: np.ndarray) -> np.ndarray:
        """
        γ_i / (n b_1⋯b_d); 恰好落在箱面上的点取相邻箱的平均值
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        scaled = (points - self.origin) / self.binwidths
        nearest = np.rint(scaled)
        on_edge = np.abs(scaled - nearest) <= EDGE_TOL * np.maximum(1.0, np.abs(scaled))
        lower = np.floor(scaled).astype(int)
        edge_index = nearest.astype(int)
        total = np.zeros(points.shape[0])
        combos = 1 << self.d
        for mask in range(combos):
            shift = np.array([(mask >> j) & 1 for j in range(self.d)])
            index = np.where(on_edge, edge_index - shift, lower)
            total += self._lookup(index)
        return total / combos / (self.n * self.bin_volume)

    def restrict(self, lower_corner: np.ndarray) -> "HistogramModel":
        """只保留下角点在 lower_corner 之上(含)的箱, n 不变"""
        lower_corner = np.asarray(lower_corner, dtype=float)
        kept = {}
        for key, count in self.counts.items():
            corner = self.origin + np.asarray(key) * self.binwidths
            if np.all(corner >= lower_corner - EDGE_TOL * self.binwidths):
                kept[key] = count
        return HistogramModel(self.origin, self.binwidths, kept, self.n)

    def upper_edge(self) -> np.ndarray:
        if not self.counts:
            return self.origin + self.binwidths
        keys = np.array(list(self.counts.keys()))
        return self.origin + (keys.max(axis=0) + 1) * self.binwidths


def hist_fit(data: DataMatrix, b, origin=None) -> HistogramModel:
    """
    构建直方图

    Args:
        data: 样本
        b: 每个边缘的箱宽
        origin: 锚点，为None时取每列最小值

    Returns:
        HistogramModel: 直方图

    Raises:
        DataError: 箱宽或锚点非有限、箱宽非正
    """
    b = np.broadcast_to(np.asarray(b, dtype=float), (data.d,)).copy()
    origin = data.values.min(axis=0) if origin is None else np.broadcast_to(
        np.asarray(origin, dtype=float), (data.d,)).copy()
    if not (np.all(np.isfinite(b)) and np.all(np.isfinite(origin))):
        raise DataError("binwidths and origin must be finite")
    if np.any(b <= 0):
        raise DataError("binwidths must be positive")
    index = np.floor((data.values - origin) / b).astype(int)
    keys, counts = np.unique(index, axis=0, return_counts=True)
    table = {tuple(int(v) for v in key): int(c) for key, c in zip(keys, counts)}
    return HistogramModel(origin=origin, binwidths=b, counts=table, n=data.n)


def aligned_grid(model: HistogramModel, lower: np.ndarray, upper: np.ndarray,
                 points: Optional[int] = None) -> DensityGrid:
    """
    与箱边界对齐的网格: 每个箱边界都是网格节点, 箱内等距插入节点
    """
    points = points or settings.GRID_POINTS.get(model.d, settings.GRID_POINTS_3D)
    axes = []
    for j in range(model.d):
        b, o = model.binwidths[j], model.origin[j]
        k_lo = int(np.ceil((lower[j] - o) / b - EDGE_TOL))
        k_hi = max(int(np.ceil((upper[j] - o) / b - EDGE_TOL)), k_lo + 1)
        edges = o + b * np.arange(k_lo, k_hi + 1)
        per_bin = max(1, int(np.ceil(points / max(1, edges.size - 1))))
        nodes = [np.linspace(a, c, per_bin + 1)[:-1] for a, c in zip(edges[:-1], edges[1:])]
        axis = np.concatenate(nodes + [edges[-1:]])
        if lower[j] < axis[0] - EDGE_TOL * b:
            axis = np.concatenate([[lower[j]], axis])
        axes.append(axis)
    return grid_from_axes(axes, metadata={"aligned": True})


def hist_tail_density(model: HistogramModel, region: TailRegion, upper: Optional[np.ndarray] = None,
                      points: Optional[int] = None) -> TailDensityModel:
    """
    直方图尾部密度: 只保留完全位于 (u, ∞) 内的箱, 以这些箱的质量重新归一化

    Args:
        model: 直方图
        region: 尾部区域
        upper: 网格上界，为None时取最高非空箱的上边界
        points: 每轴网格节点数

    Raises:
        DataError: 阈值以上没有观测
    """
    tail = model.restrict(region.u)
    mass = tail.total_mass()
    if mass <= 0:
        raise DataError("histogram has no observations above the threshold")
    top = tail.upper_edge()
    upper = top if upper is None else np.maximum(np.asarray(upper, dtype=float), top)
    grid = aligned_grid(tail, region.u, upper, points)
    values = tail.density(grid.points()) / mass
    return TailDensityModel(base=tail, region=region, normalizer=mass,
                            grid=grid.with_values(values, estimator_id="hist"), estimator_id="hist",
                            details={"binwidths": model.binwidths.tolist(), "origin": model.origin.tolist()})


def fit_tail_histogram(data: DataMatrix, region: TailRegion, upper: Optional[np.ndarray] = None,
                       points: Optional[int] = None, origin=None) -> TailDensityModel:
    """默认流程: 尾部样本的正态尺度箱宽, 锚点对齐到 u"""
    b = ns_binwidth(data.exceedances(region.u))
    model = hist_fit(data, b, region.u if origin is None else origin)
    return hist_tail_density(model, region, upper, points)
