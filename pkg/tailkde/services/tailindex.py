"""
尾部指标与模型选择

候选尾部密度 g 与参考尾部估计 f̂ 在 (u, 截断上界) 网格上的 L1 / L2 差异,
以及按指标取最小的模型选择规则。
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core.data import DataMatrix, TailRegion, empirical_quantile
from ..core.errors import ConfigError, DataError, EstimationError, TailKdeError
from ..core.grid import DensityGrid
from ..core.logging import logger
from ..models.enums import IndexKind, Loss, index_kind
from .estimators import fit_tail
from .estimators.base import TailFit
from .kde import Density, TailDensityModel
from .transform import default_offset


@dataclass
class TailIndexReport:
    """单个候选的尾部指标"""

    candidate: str
    index_kind: Optional[IndexKind]
    loss: Loss
    value: float
    grid: Dict = field(default_factory=dict)


def grid_summary(grid: DensityGrid) -> Dict:
    return {
        "lower": grid.lower.tolist(),
        "upper": grid.upper.tolist(),
        "points_per_axis": list(grid.shape),
        "spacing": grid.metadata.get("spacing", "aligned" if grid.metadata.get("aligned") else None),
    }


def _discrepancy(candidate_values: np.ndarray, reference_values: np.ndarray, grid: DensityGrid, loss: Loss) -> float:
    diff = candidate_values - reference_values
    integrand = np.abs(diff) if loss == Loss.L1 else diff * diff
    return max(0.0, grid.integrate(integrand))


def tail_index(candidate: Density, reference: TailDensityModel, loss: Loss = Loss.L2,
               grid: Optional[DensityGrid] = None, name: str = "candidate") -> TailIndexReport:
    """
    尾部指标: ∫|g - f̂| 或 ∫(g - f̂)², 在参考估计的网格上用梯形求积

    Args:
        candidate: 候选尾部密度
        reference: 参考尾部估计
        loss: L1 或 L2
        grid: 求积网格，为None时使用参考估计自带的网格
        name: 候选名称

    Returns:
        TailIndexReport: 指标值

    Raises:
        EstimationError: 候选在网格上出现非有限值
    """
    loss = Loss(loss)
    if grid is None:
        grid = reference.grid
        # 网格下边界上的节点不属于开区域 (u, ∞)
        inside = np.all(grid.points() > reference.region.u, axis=1)
        reference_values = np.where(inside, grid.values.reshape(-1), 0.0)
    else:
        reference_values = reference.density(grid.points())
    candidate_values = np.asarray(candidate.density(grid.points()), dtype=float).reshape(-1)
    if not np.all(np.isfinite(candidate_values)):
        raise EstimationError(f"candidate '{name}' has non-finite values on the grid")
    kind = index_kind(reference.estimator_id, loss) if reference.estimator_id else None
    value = _discrepancy(candidate_values, reference_values, grid, loss)
    return TailIndexReport(candidate=name, index_kind=kind, loss=loss, value=value, grid=grid_summary(grid))


@dataclass
class SelectionResult:
    """模型选择结果, reports 按候选顺序排列, 失败的候选记录在 failures 中"""

    winner: int
    winner_name: str
    reports: List[TailIndexReport]
    failures: Dict[str, str] = field(default_factory=dict)
    tie: bool = False


def select_model(candidates: Sequence[Tuple[str, Density]], reference: TailDensityModel,
                 loss: Loss = Loss.L2, grid: Optional[DensityGrid] = None) -> SelectionResult:
    """
    选取尾部指标最小的候选, 指标相同时取列表中靠前者

    Args:
        candidates: (名称, 尾部密度) 列表, 至少 2 个
        reference: 参考尾部估计
        loss: L1 或 L2
        grid: 求积网格

    Returns:
        SelectionResult: 胜出者序号(相对于 candidates)及全部指标

    Raises:
        ConfigError: 候选少于 2 个
        EstimationError: 可求值的候选少于 2 个
    """
    if len(candidates) < 2:
        raise ConfigError("model selection needs at least two candidates")
    reports: List[TailIndexReport] = []
    positions: List[int] = []
    failures: Dict[str, str] = {}
    for position, (name, density) in enumerate(candidates):
        try:
            reports.append(tail_index(density, reference, loss, grid, name=name))
            positions.append(position)
        except (TailKdeError, FloatingPointError) as exc:
            logger.warning(f"候选 {name} 求值失败: {exc}")
            failures[name] = str(exc)
    if len(reports) < 2:
        raise EstimationError(f"only {len(reports)} candidate(s) could be evaluated")

    values = np.array([r.value for r in reports])
    best = int(np.argmin(values))
    tie = bool(np.sum(values == values[best]) > 1)
    if tie:
        logger.info(f"模型选择出现并列, 按候选顺序取 {reports[best].candidate}")
    return SelectionResult(winner=positions[best], winner_name=reports[best].candidate, reports=reports,
                           failures=failures, tie=tie)


def data_vs_data_index(observed: DataMatrix, modeled: DataMatrix, token: str,
                       quantile_level: Optional[float] = None, threshold: Optional[Sequence[float]] = None,
                       loss: Loss = Loss.L2, points: Optional[int] = None, diag: bool = False,
                       name: str = "modeled") -> TailIndexReport:
    """
    观测数据与模式数据的尾部指标

    阈值总是由观测数据确定; 两个样本各自使用自己的变换偏移和带宽,
    模式数据的估计在观测数据估计的网格上求值。

    Args:
        observed: 观测样本
        modeled: 模式样本
        token: 估计器标识
        quantile_level: 阈值分位数水平(与 threshold 二选一)
        threshold: 绝对阈值
        loss: L1 或 L2
        points: 每轴网格节点数
        diag: 带宽是否限制为对角阵
        name: 模式数据名称

    Returns:
        TailIndexReport: 指标值

    Raises:
        ConfigError: 阈值同时或均未给出
        DataError: 任一样本在阈值以上为空
    """
    if observed.d != modeled.d:
        raise DataError(f"observed data has d={observed.d}, modeled data has d={modeled.d}")
    region = threshold_region(observed, quantile_level, threshold)
    observed_fit = fit_tail(token, observed, region, points=points, diag=diag)
    modeled_fit = fit_modeled_tail(modeled, token, region, points=points, diag=diag)
    report = tail_index(modeled_fit.tail, observed_fit.tail, loss, name=name)
    logger.info(f"{name}: {report.loss.value} 指标 = {report.value:.6g}")
    return report


def own_offset(data: DataMatrix, u: np.ndarray) -> np.ndarray:
    """样本自己的变换偏移; 若不低于阈值则压到阈值以下 5% 极差处"""
    u0 = default_offset(data)
    spread = np.ptp(data.values, axis=0)
    return np.minimum(u0, np.asarray(u, dtype=float) - 0.05 * spread)


def threshold_region(data: DataMatrix, quantile_level: Optional[float] = None,
                     threshold: Optional[Sequence[float]] = None) -> TailRegion:
    """
    由分位数水平或绝对阈值构造尾部区域, 变换偏移取样本默认值

    Raises:
        ConfigError: 两者同时给出或都未给出
    """
    if (quantile_level is None) == (threshold is None):
        raise ConfigError("give exactly one of a threshold quantile or absolute threshold values")
    if threshold is not None:
        u = np.broadcast_to(np.asarray(threshold, dtype=float), (data.d,)).copy()
    else:
        u = empirical_quantile(data, quantile_level)
    region = TailRegion(u, own_offset(data, u), quantile_level)
    logger.info(f"阈值 u={np.round(u, 6).tolist()} u0={np.round(region.u0, 6).tolist()}")
    return region


def fit_modeled_tail(modeled: DataMatrix, token: str, region: TailRegion, points: Optional[int] = None,
                     diag: bool = False) -> TailFit:
    """
    在观测数据的阈值上拟合模式数据, 变换偏移取模式数据自己的值

    Raises:
        DataError: 模式数据在阈值以上为空
    """
    if modeled.d != region.d:
        raise DataError(f"modeled data has d={modeled.d}, threshold has d={region.d}")
    modeled.exceedances(region.u)
    modeled_region = TailRegion(region.u, own_offset(modeled, region.u), region.quantile_level)
    return fit_tail(token, modeled, modeled_region, points=points, diag=diag)
