from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from ..core.config import settings
from ..models.enums import (
    BIVARIATE_CANDIDATES,
    HISTOGRAM_TOKEN,
    KERNEL_TOKENS,
    PARAMETRIC_TOKENS,
    UNIVARIATE_CANDIDATES,
    Loss,
)
from .common import ReportBase

# 一元研究的样本量预设
PRESETS: Dict[str, int] = {"n500": 500, "n1000": 1000, "n2000": 2000}

# 实验编号别名
EXPERIMENT_ALIASES: Dict[str, str] = {
    "1d": "univariate", "2d": "bivariate",
}

UNIVARIATE_ROSTER = ["fre", "gum", "gpd", "gpd+", "hist", "kns", "kpi", "kuc", "ksc", "kns*", "kpi*", "kuc*", "ksc*"]
BIVARIATE_ROSTER = ["bil", "anl", "hr", "hist", "kpi", "kpi*"]


def valid_token(token: str) -> bool:
    return token == HISTOGRAM_TOKEN or token in KERNEL_TOKENS or token in PARAMETRIC_TOKENS


class ExperimentConfig(BaseModel):
    """模拟研究配置, 未给出的字段按实验类型取默认值"""
    experiment: str = Field(default="univariate", description="univariate 或 bivariate, 也接受 1d/2d 别名")
    preset: Optional[Literal["n500", "n1000", "n2000"]] = Field(default=None, description="一元样本量预设")
    n: Optional[int] = Field(default=None, ge=50, description="样本量")
    replicates: Optional[int] = Field(default=None, ge=1, description="重复次数")
    seed: int = Field(default=settings.DEFAULT_SEED, ge=0, description="随机种子")
    targets: Optional[List[str]] = Field(default=None, description="模拟目标简称")
    estimators: Optional[List[str]] = Field(default=None, description="计算 log L2 误差的估计器")
    references: Optional[List[str]] = Field(default=None, description="模型选择的参考估计器")
    index: List[Loss] = Field(default_factory=lambda: [Loss.L2], description="尾部指标的损失")
    quantile_level: Optional[float] = Field(default=None, gt=0, lt=1, description="阈值分位数水平")
    points: Optional[int] = Field(default=None, ge=16, description="每轴网格节点数")
    diag: bool = Field(default=False, description="带宽是否限制为对角阵")
    convention: Literal["evd", "literal"] = Field(default=settings.DEPENDENCE_CONVENTION,
                                                  description="依赖参数约定")
    level_probs: List[float] = Field(default_factory=lambda: [0.25, 0.5, 0.75, 0.99],
                                     description="最高密度水平集的概率")

    @field_validator("experiment")
    @classmethod
    def resolve_alias(cls, value: str) -> str:
        value = EXPERIMENT_ALIASES.get(value, value)
        if value not in ("univariate", "bivariate"):
            raise ValueError(f"unknown experiment '{value}'")
        return value

    @field_validator("estimators", "references")
    @classmethod
    def check_tokens(cls, value: Optional[List[str]]) -> Optional[List[str]]:
        if value is not None:
            bad = [token for token in value if not valid_token(token)]
            if bad:
                raise ValueError(f"unknown estimator tokens: {', '.join(bad)}")
        return value

    @model_validator(mode="after")
    def fill_defaults(self) -> "ExperimentConfig":
        univariate = self.experiment == "univariate"
        if self.preset is not None:
            if not univariate:
                raise ValueError("sample size presets apply to the univariate study only")
            if self.n is None:
                self.n = PRESETS[self.preset]
        if self.n is None:
            self.n = 2000 if univariate else 4000
        if self.replicates is None:
            self.replicates = settings.UNIVARIATE_REPLICATES if univariate else settings.BIVARIATE_REPLICATES
        if self.quantile_level is None:
            self.quantile_level = 0.95 if univariate else 0.90
        if self.targets is None:
            self.targets = list(UNIVARIATE_CANDIDATES if univariate else BIVARIATE_CANDIDATES)
        allowed = UNIVARIATE_CANDIDATES if univariate else BIVARIATE_CANDIDATES
        if any(target not in allowed for target in self.targets):
            raise ValueError(f"targets must be drawn from {', '.join(allowed)}")
        if self.estimators is None:
            self.estimators = list(UNIVARIATE_ROSTER if univariate else BIVARIATE_ROSTER)
        if self.references is None:
            self.references = ["hist", "kpi", "kpi*", "gpd+"] if univariate else ["hist", "kpi", "kpi*"]
        if not univariate and "gpd+" in self.references:
            raise ValueError("gpd+ is a univariate reference")
        return self

    @property
    def d(self) -> int:
        return 1 if self.experiment == "univariate" else 2

    def fitted_tokens(self) -> List[str]:
        """需要拟合的全部估计器, 保持首次出现的顺序"""
        candidates = UNIVARIATE_CANDIDATES if self.d == 1 else BIVARIATE_CANDIDATES
        ordered: List[str] = []
        for token in [*candidates, *self.references, *self.estimators]:
            if token not in ordered:
                ordered.append(token)
        return ordered


class FailureSummary(BaseModel):
    """失败重复的统计"""
    replicates: int = Field(..., description="重复总数")
    failed: int = Field(..., description="失败重复数")
    rate: float = Field(..., description="失败率")
    messages: List[str] = Field(default_factory=list, description="失败原因(去重)")


class StudyReport(ReportBase):
    """模拟研究报告"""
    command: str = Field(default="study", description="子命令名称")
    experiment: str = Field(..., description="实验类型")
    passed: bool = Field(..., description="所有目标的失败率都不超过上限")
    failures: Dict[str, FailureSummary] = Field(default_factory=dict, description="每个目标的失败统计")
    selection: Dict[str, Dict[str, Dict[str, float]]] = Field(
        default_factory=dict, description="目标 -> 指标类型 -> 候选 -> 胜出比例")
    correct_selection: Dict[str, Dict[str, float]] = Field(
        default_factory=dict, description="目标 -> 指标类型 -> 正确选择比例")
    errors: Dict[str, Dict[str, Dict[str, Any]]] = Field(
        default_factory=dict, description="目标 -> 估计器 -> log L2 误差汇总(一元)")
    mean_index: Dict[str, Dict[str, Dict[str, float]]] = Field(
        default_factory=dict, description="目标 -> 拟合模型 -> 指标类型 -> 平均 L2 (二元)")
    plots: Dict[str, Any] = Field(default_factory=dict, description="绘图数据")
    tables: Dict[str, str] = Field(default_factory=dict, description="对齐文本表格")
