from typing import Any, Dict, Optional

from pydantic import BaseModel, ConfigDict, Field

from ..core.config import settings


class ResponseBase(BaseModel):
    """基础输出模式"""
    success: bool = Field(default=True, description="操作是否成功")
    message: str = Field(default="操作成功", description="输出消息")


class ErrorResponse(ResponseBase):
    """错误输出模式, 写到 stderr"""
    success: bool = Field(default=False, description="操作是否成功")
    message: str = Field(default="操作失败", description="错误消息")
    error_code: Optional[str] = Field(default=None, description="错误类型")
    exit_code: int = Field(default=1, description="命令行退出码")


class ReportBase(BaseModel):
    """所有顶层报告的公共字段"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    schema_version: str = Field(default=settings.SCHEMA_VERSION, description="输出格式版本")
    command: str = Field(..., description="子命令名称")
    config: Dict[str, Any] = Field(default_factory=dict, description="解析后的完整配置")
