from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from ...core.data import DataMatrix, TailRegion
from ..kde import TailDensityModel


@dataclass
class TailFit:
    """
    一次尾部密度拟合的结果

    model 为底层拟合对象(KdeModel / HistogramModel / 参数模型),
    tail 为在 region 上归一化后的尾部密度。
    """

    token: str
    model: Any
    tail: TailDensityModel
    region: TailRegion
    converged: bool = True
    selector: Optional[Any] = None
    details: Dict[str, Any] = field(default_factory=dict)
    data: Optional[DataMatrix] = field(default=None, repr=False)

    @property
    def normalizer(self) -> float:
        return self.tail.normalizer

    def density(self, points: np.ndarray) -> np.ndarray:
        return self.tail.density(points)


class TailEstimator(ABC):
    """尾部密度估计器基类"""

    @property
    @abstractmethod
    def estimator_name(self) -> str:
        """估计器类别名称"""
        pass

    @property
    @abstractmethod
    def supported_tokens(self) -> List[str]:
        """支持的命令行标识"""
        pass

    @abstractmethod
    def supports_dimension(self, token: str, d: int) -> bool:
        """标识 token 是否适用于 d 维数据"""
        pass

    @abstractmethod
    def fit(self, token: str, data: DataMatrix, region: TailRegion, points: Optional[int] = None,
            diag: bool = False) -> TailFit:
        """
        拟合并构造尾部密度

        Args:
            token: 估计器标识
            data: 原始空间样本
            region: 尾部区域
            points: 每轴网格节点数，为None时使用默认值
            diag: 带宽矩阵是否限制为对角阵

        Returns:
            TailFit: 拟合结果
        """
        pass

    @abstractmethod
    def retarget(self, fit: TailFit, region: TailRegion, points: Optional[int] = None) -> TailFit:
        """
        在新的阈值上复用已有拟合, 只重新计算归一化常数

        Args:
            fit: 已有拟合
            region: 新的尾部区域
            points: 每轴网格节点数

        Returns:
            TailFit: 新阈值上的结果
        """
        pass
