"""
领域基础类型: 样本矩阵、带宽矩阵、尾部区域, 以及 CSV 读取
"""

from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..models.enums import Space
from .errors import DataError, EstimationError
from .logging import logger

MIN_SAMPLE_SIZE = 2


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class DataMatrix:
    """
    n×d 样本矩阵, 列顺序即边缘分布编号

    同一容器既存放原始样本 X 也存放变换后的 Y, 由 space 区分。
    n = 1 是合法的: 单点核估计与只有一个超阈值观测的尾部子样本都会用到。
    需要更多观测的操作在入口处自行检查(带宽选择要求 n ≥ d+1, 直方图要求 n ≥ 2),
    从文件读入的样本要求 n ≥ MIN_SAMPLE_SIZE。
    """

    values: np.ndarray
    space: Space = Space.ORIGINAL
    columns: Optional[List[str]] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] < 1:
            raise DataError("data must be a non-empty n×d matrix")
        if values.shape[1] not in (1, 2, 3):
            raise DataError(f"dimension d={values.shape[1]} is not supported (d must be 1, 2 or 3)")
        if not np.all(np.isfinite(values)):
            rows, cols = np.nonzero(~np.isfinite(values))
            raise DataError(f"non-finite value at row {rows[0] + 1}, column {cols[0] + 1}")
        object.__setattr__(self, "values", _frozen(values))

    @classmethod
    def from_array(cls, values, space: Space = Space.ORIGINAL) -> "DataMatrix":
        return cls(values=np.asarray(values, dtype=float), space=space)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def covariance(self) -> np.ndarray:
        """样本协方差矩阵 (d×d)"""
        if self.n < 2:
            raise DataError("sample covariance needs at least two observations")
        return np.atleast_2d(np.cov(self.values, rowvar=False, ddof=1))

    def std(self) -> np.ndarray:
        if self.n < 2:
            raise DataError("standard deviation needs at least two observations")
        return self.values.std(axis=0, ddof=1)

    def exceedances(self, u: np.ndarray) -> "DataMatrix":
        """所有坐标都超过阈值 u 的子样本"""
        mask = np.all(self.values > np.asarray(u, dtype=float), axis=1)
        if not np.any(mask):
            raise DataError("no observation lies above the threshold")
        return DataMatrix(self.values[mask], space=self.space, columns=self.columns)

    def tie_fraction(self) -> float:
        """与其他观测完全重合的观测所占比例"""
        _, counts = np.unique(self.values, axis=0, return_counts=True)
        return float(np.sum(counts[counts > 1])) / self.n


@dataclass(frozen=True, eq=False)
class BandwidthMatrix:
    """
    d×d 对称正定带宽矩阵 H(单位为数据单位的平方)

    零矩阵仅用于表示 G = 0 的狄拉克试点核。
    """

    H: np.ndarray

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise EstimationError("bandwidth matrix must be square")
        if not np.all(np.isfinite(H)):
            raise EstimationError("bandwidth matrix has non-finite entries")
        scale = max(np.max(np.abs(H)), np.finfo(float).tiny)
        if np.max(np.abs(H - H.T)) > 1e-12 * scale:
            raise EstimationError("bandwidth matrix is not symmetric")
        H = (H + H.T) / 2.0
        if np.any(H != 0) and np.min(np.linalg.eigvalsh(H)) <= 0:
            raise EstimationError("bandwidth matrix is not positive-definite")
        object.__setattr__(self, "H", _frozen(H))

    @classmethod
    def from_scalar(cls, h: float, d: int = 1) -> "BandwidthMatrix":
        """由标准差意义下的带宽 h 构造 h² I"""
        return cls(h * h * np.eye(d))

    @classmethod
    def zeros(cls, d: int) -> "BandwidthMatrix":
        return cls(np.zeros((d, d)))

    @property
    def d(self) -> int:
        return self.H.shape[0]

    @property
    def is_zero(self) -> bool:
        return not np.any(self.H)

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.H))

    def cholesky(self) -> np.ndarray:
        try:
            return np.linalg.cholesky(self.H)
        except np.linalg.LinAlgError as exc:
            raise EstimationError("bandwidth matrix is singular") from exc

    def scaled(self, factor: float) -> "BandwidthMatrix":
        return BandwidthMatrix(self.H * factor)

    def tolist(self) -> list:
        return self.H.tolist()


@dataclass(frozen=True, eq=False)
class TailRegion:
    """阈值 u 与变换偏移 u0, 定义尾部 (u, ∞) 和变换定义域 (u0, ∞)"""

    u: np.ndarray
    u0: np.ndarray
    quantile_level: Optional[float] = None

    def __post_init__(self):
        u = np.atleast_1d(np.asarray(self.u, dtype=float))
        u0 = np.atleast_1d(np.asarray(self.u0, dtype=float))
        if u.shape != u0.shape:
            raise DataError("threshold and offset dimensions differ")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(u0))):
            raise DataError("threshold and offset must be finite")
        if np.any(u0 >= u):
            raise DataError("transform offset must lie strictly below the threshold")
        if self.quantile_level is not None and not 0 < self.quantile_level < 1:
            raise DataError("quantile level must lie in (0, 1)")
        object.__setattr__(self, "u", _frozen(u))
        object.__setattr__(self, "u0", _frozen(u0))

    @property
    def d(self) -> int:
        return self.u.size

    def bind(self, data: DataMatrix) -> "TailRegion":
        """校验 u0 低于每列最小值"""
        if data.d != self.d:
            raise DataError(f"region has dimension {self.d}, data has {data.d}")
        if np.any(self.u0 >= data.values.min(axis=0)):
            raise DataError("transform offset must lie below every observation")
        return self

    def with_threshold(self, u: Sequence[float], quantile_level: Optional[float] = None) -> "TailRegion":
        return TailRegion(u=np.asarray(u, dtype=float), u0=self.u0, quantile_level=quantile_level)


def empirical_quantile(data: DataMatrix, p: float) -> np.ndarray:
    """
    逐列样本分位数(顺序统计量线性插值, type-7)

    Args:
        data: 样本
        p: 概率水平, 0 < p < 1

    Returns:
        np.ndarray: 长度为 d 的分位数向量

    Raises:
        DataError: p 不在 (0,1) 内或样本为空
    """
    if not 0 < p < 1:
        raise DataError(f"quantile level {p} must lie strictly between 0 and 1")
    if data.n == 0:
        raise DataError("empirical quantile of an empty sample")
    return np.quantile(data.values, p, axis=0, method="linear")


def _is_numeric(cell) -> bool:
    try:
        float(cell)
        return True
    except (TypeError, ValueError):
        return False


def read_csv(path: Union[str, Path], cols: Optional[Sequence[str]] = None) -> DataMatrix:
    """
    读取逗号分隔的样本文件

    首行若含非数值单元格则视为表头。空白或 NaN 单元格会报告所在的行和列。

    Args:
        path: 文件路径
        cols: 选取的列, 可以是表头名称或从 1 开始的列号

    Returns:
        DataMatrix: 原始空间中的样本

    Raises:
        DataError: 文件不存在、无法解析或含缺失值
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"input file not found: {path}")

    try:
        raw = pd.read_csv(path, header=None, dtype=str, skipinitialspace=True,
                          keep_default_na=False, skip_blank_lines=True)
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as exc:
        raise DataError(f"cannot parse {path}: {exc}") from exc

    first_row = [cell.strip() for cell in raw.iloc[0].tolist()]
    has_header = not all(_is_numeric(cell) for cell in first_row if cell != "")
    if has_header:
        raw = raw.iloc[1:]
        raw.columns = first_row
    else:
        raw.columns = [f"x{j + 1}" for j in range(raw.shape[1])]
    line_offset = 2 if has_header else 1

    if cols:
        selected = []
        for col in cols:
            if col in raw.columns:
                selected.append(col)
            elif str(col).isdigit() and 1 <= int(col) <= raw.shape[1]:
                selected.append(raw.columns[int(col) - 1])
            else:
                raise DataError(f"column '{col}' not found in {path}")
        raw = raw[selected]

    numeric = raw.apply(lambda column: pd.to_numeric(column.str.strip(), errors="coerce"))
    bad = numeric.isna().to_numpy() | ~np.isfinite(numeric.to_numpy(dtype=float, na_value=np.nan))
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise DataError(
            f"{path}: missing or non-numeric value at line {row + line_offset}, column '{numeric.columns[col]}'"
        )

    if numeric.shape[0] < MIN_SAMPLE_SIZE:
        raise DataError(f"{path}: need at least {MIN_SAMPLE_SIZE} observations, found {numeric.shape[0]}")
    logger.info(f"读取样本 {path}: n={numeric.shape[0]}, d={numeric.shape[1]}, header={has_header}")
    return DataMatrix(numeric.to_numpy(dtype=float), columns=[str(c) for c in numeric.columns])
