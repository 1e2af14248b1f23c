"""
正定矩阵上的无导数单纯形搜索

参数化: H = L Lᵀ, L 为下三角且对角元取对数, 每一步迭代都保证正定。
"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
from scipy.optimize import minimize

from ..core.config import settings
from ..core.data import BandwidthMatrix
from ..core.errors import EstimationError
from ..core.logging import logger


@dataclass
class OptimizerTrace:
    """优化过程记录"""

    iterations: int = 0
    evaluations: int = 0
    converged: bool = False
    start_value: float = float("nan")
    final_value: float = float("nan")
    iterates: List[np.ndarray] = field(default_factory=list)


def to_params(H: BandwidthMatrix, diag: bool = False) -> np.ndarray:
    L = H.cholesky()
    if diag:
        return np.log(np.diag(L))
    rows, cols = np.tril_indices(H.d)
    theta = L[rows, cols].copy()
    on_diag = rows == cols
    theta[on_diag] = np.log(theta[on_diag])
    return theta


def from_params(theta: np.ndarray, d: int, diag: bool = False) -> BandwidthMatrix:
    if diag:
        return BandwidthMatrix(np.diag(np.exp(2.0 * np.asarray(theta))))
    L = np.zeros((d, d))
    rows, cols = np.tril_indices(d)
    L[rows, cols] = theta
    L[np.diag_indices(d)] = np.exp(np.diag(L))
    return BandwidthMatrix(L @ L.T)


def optimize_pd(
    objective: Callable[[BandwidthMatrix], float],
    start: BandwidthMatrix,
    diag: bool = False,
    keep_iterates: bool = False,
    max_iter: Optional[int] = None,
):
    """
    在正定矩阵上最小化目标函数

    Args:
        objective: 目标函数
        start: 初始矩阵
        diag: 是否限制为对角矩阵
        keep_iterates: 是否保存每次迭代的矩阵
        max_iter: 最大迭代次数，为None时取 OPTIMIZER_ITER_PER_PARAM × 参数个数

    Returns:
        Tuple[BandwidthMatrix, OptimizerTrace]: 找到的最优矩阵及优化记录

    Raises:
        EstimationError: 目标函数在初始点不是有限值
    """
    d = start.d
    theta0 = to_params(start, diag)
    f0 = float(objective(start))
    if not np.isfinite(f0):
        raise EstimationError("objective is not finite at the starting bandwidth")

    trace = OptimizerTrace(start_value=f0)

    def wrapped(theta: np.ndarray) -> float:
        trace.evaluations += 1
        try:
            value = float(objective(from_params(theta, d, diag)))
        except (EstimationError, np.linalg.LinAlgError, FloatingPointError):
            return np.inf
        return value if np.isfinite(value) else np.inf

    def record(theta: np.ndarray) -> None:
        trace.iterations += 1
        if keep_iterates:
            trace.iterates.append(from_params(theta, d, diag).H.copy())

    size = theta0.size
    simplex = np.vstack([theta0, theta0 + 0.1 * np.eye(size)])
    result = minimize(
        wrapped,
        theta0,
        method="Nelder-Mead",
        callback=record,
        options={
            "maxiter": max_iter or settings.OPTIMIZER_ITER_PER_PARAM * size,
            "xatol": 1e-7,
            "fatol": settings.OPTIMIZER_RTOL * max(abs(f0), np.finfo(float).tiny),
            "initial_simplex": simplex,
        },
    )

    best_theta = result.x if result.fun <= f0 else theta0
    trace.final_value = float(min(result.fun, f0))
    trace.converged = bool(result.success)
    if not trace.converged:
        logger.warning(f"单纯形搜索未收敛: {result.message} (iterations={trace.iterations})")
    logger.debug(f"optimize_pd: f0={f0:.6g} f*={trace.final_value:.6g} iterations={trace.iterations}")
    return from_params(best_theta, d, diag), trace
