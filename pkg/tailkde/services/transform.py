"""
对数变换 t(x) = log(x - u0), 将 (u0, ∞)^d 映射到 R^d
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..core.data import DataMatrix
from ..core.errors import DataError
from ..models.enums import Space

# 距 u0 不足 REJECT_TOL * 列极差的值视为越界
REJECT_TOL = 1e-12
OFFSET_FRACTION = 0.05


@dataclass(frozen=True, eq=False)
class LogTransform:
    """逐边缘的对数变换, 每个边缘有独立的偏移 u0_j"""

    u0: np.ndarray
    scale: Optional[np.ndarray] = None

    def __post_init__(self):
        u0 = np.atleast_1d(np.asarray(self.u0, dtype=float))
        scale = np.ones_like(u0) if self.scale is None else np.atleast_1d(np.asarray(self.scale, dtype=float))
        object.__setattr__(self, "u0", u0)
        object.__setattr__(self, "scale", scale)

    @property
    def d(self) -> int:
        return self.u0.size

    def in_domain(self, x: np.ndarray) -> np.ndarray:
        """逐行判断是否严格位于 (u0 + 容差, ∞)^d 内"""
        x = np.atleast_2d(x)
        return np.all(x - self.u0 > REJECT_TOL * self.scale, axis=1)

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.d:
            raise DataError(f"point has dimension {x.shape[-1]}, transform has {self.d}")
        if not np.all(self.in_domain(x.reshape(-1, self.d))):
            raise DataError("value at or below the transform offset u0")
        return x

    def forward(self, x) -> np.ndarray:
        x = self._check(np.atleast_1d(x))
        return np.log(x - self.u0)

    def inverse(self, y) -> np.ndarray:
        return self.u0 + np.exp(np.asarray(y, dtype=float))

    def log_jacobian(self, x) -> np.ndarray:
        x = self._check(np.atleast_1d(x))
        return -np.sum(np.log(x - self.u0), axis=-1)

    def jacobian(self, x) -> np.ndarray:
        """|J_t(x)| = ∏_j 1 / (x_j - u0_j)"""
        return np.exp(self.log_jacobian(x))

    def apply(self, data: DataMatrix) -> DataMatrix:
        """将原始样本变换到对数空间"""
        if data.space != Space.ORIGINAL:
            raise DataError("data are already in the transformed space")
        return DataMatrix(self.forward(data.values), space=Space.TRANSFORMED, columns=data.columns)


def default_offset(data: DataMatrix) -> np.ndarray:
    """
    默认偏移: 每列最小值减去 5% 的列极差

    Args:
        data: 原始样本, n >= 2

    Returns:
        np.ndarray: 长度 d 的 u0

    Raises:
        DataError: 样本过少或存在常数列
    """
    if data.n < 2:
        raise DataError("default offset needs at least two observations")
    lo = data.values.min(axis=0)
    spread = data.values.max(axis=0) - lo
    if np.any(spread <= 0):
        raise DataError(f"column {int(np.argmin(spread)) + 1} has zero range")
    return lo - OFFSET_FRACTION * spread


def fit_transform(data: DataMatrix, u0: Optional[np.ndarray] = None) -> LogTransform:
    """以默认(或给定)偏移构造变换, 并记录列极差作为拒绝容差的尺度"""
    spread = np.ptp(data.values, axis=0) if data.n > 1 else np.ones(data.d)
    spread = np.where(spread > 0, spread, 1.0)
    offset = default_offset(data) if u0 is None else np.atleast_1d(np.asarray(u0, dtype=float))
    return LogTransform(u0=offset, scale=spread)


def forward(t: LogTransform, x) -> np.ndarray:
    return t.forward(x)


def inverse(t: LogTransform, y) -> np.ndarray:
    return t.inverse(y)


def jacobian(t: LogTransform, x) -> float:
    return float(t.jacobian(x))
