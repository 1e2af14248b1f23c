from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from .common import ReportBase


class SelectorResultSchema(BaseModel):
    """带宽选择结果"""
    selector: str = Field(..., description="选择器: NS/PI/UCV/SCV")
    H: List[List[float]] = Field(..., description="带宽矩阵")
    objective_value: Optional[float] = Field(default=None, description="目标函数最优值")
    iterations: int = Field(default=0, description="优化迭代次数")
    converged: bool = Field(default=True, description="是否收敛")
    pilot_G: Optional[List[List[float]]] = Field(default=None, description="试点带宽矩阵")
    fallback: Optional[str] = Field(default=None, description="回退到 NS 的原因")


class GridSchema(BaseModel):
    """尾部密度网格"""
    axes: List[List[float]] = Field(..., description="各坐标轴节点")
    values: List[Any] = Field(..., description="节点上的尾部密度(行优先张量)")


class FitReport(ReportBase):
    """单个估计器的拟合报告"""
    command: str = Field(default="fit", description="子命令名称")
    estimator: str = Field(..., description="估计器标识")
    n: int = Field(..., description="样本量")
    d: int = Field(..., description="维数")
    threshold: List[float] = Field(..., description="阈值 u")
    offset: List[float] = Field(..., description="变换偏移 u0")
    quantile_level: Optional[float] = Field(default=None, description="阈值分位数水平")
    normalizer: float = Field(..., description="尾部质量 F̄(u)")
    converged: bool = Field(default=True, description="拟合是否收敛")
    bandwidth: Optional[SelectorResultSchema] = Field(default=None, description="带宽选择结果(核估计)")
    binwidths: Optional[List[float]] = Field(default=None, description="箱宽(直方图)")
    parameters: Optional[Dict[str, Any]] = Field(default=None, description="参数模型的参数")
    grid: GridSchema = Field(..., description="尾部密度网格")


class ThresholdEntry(BaseModel):
    """tail 子命令中一个阈值的结果"""
    threshold: List[float] = Field(..., description="阈值 u")
    quantile_level: Optional[float] = Field(default=None, description="阈值分位数水平")
    normalizer: float = Field(..., description="尾部质量")
    tail_quantiles: Dict[str, float] = Field(default_factory=dict, description="尾部分位数(仅 d=1)")
    grid: Optional[GridSchema] = Field(default=None, description="尾部密度网格")


class TailReport(ReportBase):
    """一次拟合、多个阈值"""
    command: str = Field(default="tail", description="子命令名称")
    estimator: str = Field(..., description="估计器标识")
    fit_count: int = Field(..., description="本次运行的核估计拟合次数")
    thresholds: List[ThresholdEntry] = Field(..., description="各阈值的结果")


class IndexEntry(BaseModel):
    """一个候选的尾部指标"""
    candidate: str = Field(..., description="候选名称")
    index_kind: Optional[str] = Field(default=None, description="指标类型")
    value: Optional[float] = Field(default=None, description="指标值")
    error: Optional[str] = Field(default=None, description="失败原因")


class SelectionReport(ReportBase):
    """参数模型选择"""
    command: str = Field(default="select", description="子命令名称")
    reference: str = Field(..., description="参考估计器标识")
    loss: str = Field(..., description="l1 或 l2")
    deviance: Optional[Dict[str, Any]] = Field(default=None, description="Gumbel/Fréchet 偏差检验")
    ranking: List[IndexEntry] = Field(..., description="按指标升序的候选")
    winner: str = Field(..., description="胜出模型")
    tie: bool = Field(default=False, description="是否按候选顺序打破并列")
    grid: Dict[str, Any] = Field(default_factory=dict, description="求积网格信息")


class CompareRow(BaseModel):
    """compare 子命令中一个模式文件的结果"""
    model: str = Field(..., description="模式数据文件")
    indices: Dict[str, Optional[float]] = Field(default_factory=dict, description="各指标的值")
    error: Optional[str] = Field(default=None, description="失败原因")


class CompareReport(ReportBase):
    """观测数据与多个模式数据的比较"""
    command: str = Field(default="compare", description="子命令名称")
    observed: str = Field(..., description="观测数据文件")
    estimator: str = Field(..., description="估计器标识")
    threshold: List[float] = Field(..., description="由观测数据确定的阈值")
    rows: List[CompareRow] = Field(..., description="每个模式文件一行")
    winners: Dict[str, Optional[str]] = Field(default_factory=dict, description="各指标下的胜出文件")
