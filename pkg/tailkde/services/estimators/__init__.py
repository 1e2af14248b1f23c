from typing import Dict, List, Type

from ...core.errors import ConfigError
from ...core.logging import logger
from .base import TailEstimator, TailFit

# 估计器注册表: 命令行标识 -> 估计器类
_estimators: Dict[str, Type[TailEstimator]] = {}


def register_estimator(estimator_class: Type[TailEstimator]) -> Type[TailEstimator]:
    """
    注册估计器, 其支持的每个标识都指向该类

    Args:
        estimator_class: 估计器类

    Returns:
        Type[TailEstimator]: 估计器类
    """
    estimator_instance = estimator_class()
    for token in estimator_instance.supported_tokens:
        _estimators[token] = estimator_class
    return estimator_class


def get_estimator(token: str) -> TailEstimator:
    """
    获取估计器实例

    Args:
        token: 估计器标识, 如 kpi、kns*、hist、gpd+、hr

    Returns:
        TailEstimator: 估计器实例

    Raises:
        ConfigError: 标识不存在
    """
    estimator_class = _estimators.get(token)

    if estimator_class is None:
        available_tokens = ", ".join(sorted(_estimators.keys()))
        logger.error(f"Estimator '{token}' not found. Available estimators: {available_tokens}")
        raise ConfigError(f"Estimator '{token}' not found")

    return estimator_class()


def available_tokens() -> List[str]:
    """所有已注册的标识"""
    return sorted(_estimators.keys())


def fit_tail(token: str, data, region, points=None, diag: bool = False) -> TailFit:
    """按标识拟合尾部密度, 先检查维数是否适用"""
    estimator = get_estimator(token)
    if not estimator.supports_dimension(token, data.d):
        raise ConfigError(f"estimator '{token}' does not support d={data.d}")
    return estimator.fit(token, data, region, points=points, diag=diag)


# 导入所有估计器模块以触发注册
from . import kernel  # 变换核与标准核
from . import histogram  # 直方图
from . import parametric  # 参数模型
