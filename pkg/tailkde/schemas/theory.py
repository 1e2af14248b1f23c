from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from .common import ReportBase


class TheoryCheck(BaseModel):
    """单个数值检查"""
    name: str = Field(..., description="检查名称")
    prediction: float = Field(..., description="理论值")
    estimate: float = Field(..., description="数值/Monte Carlo 估计")
    se: Optional[float] = Field(default=None, description="Monte Carlo 标准误")
    tolerance: float = Field(..., description="容差")
    passed: bool = Field(..., description="是否通过")
    details: Dict[str, Any] = Field(default_factory=dict, description="检查参数与中间结果")


class TheoryReport(ReportBase):
    """verify-theory 输出"""
    command: str = Field(default="verify-theory", description="子命令名称")
    passed: bool = Field(..., description="全部检查是否通过")
    checks: List[TheoryCheck] = Field(..., description="检查结果")
