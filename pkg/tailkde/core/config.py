"""
配置文件
如果在 .env 文件中配置了相同的变量名, 则以 .env 文件中的配置为准
命令行参数优先级最高, 解析后的完整配置会回显到每个输出 JSON 的 config 字段
"""

import os
from typing import Dict, Literal

from pydantic import Field, computed_field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """应用配置类，使用Pydantic V2语法"""

    # 应用信息
    APP_NAME: str = "tailkde"
    SCHEMA_VERSION: str = "1.0"

    # 日志配置
    LOG_LEVEL: str = "INFO"

    # 网格配置（每个坐标轴的节点数）
    GRID_POINTS_1D: int = Field(default=512, ge=16)
    GRID_POINTS_2D: int = Field(default=200, ge=16)
    GRID_POINTS_3D: int = Field(default=64, ge=16)
    GRID_SPACING: Literal["log", "linear"] = "log"
    GRID_UPPER_SD: float = 3.0  # 默认上界 = max + GRID_UPPER_SD * sd
    SURVIVAL_TOL: float = 1e-5  # 网格扩展的质量增量阈值
    GRID_MAX_EXTENSIONS: int = 12

    # 核密度求值
    DIRECT_SUM_MAX_N: int = 50000
    KERNEL_CUTOFF_SD: float = 6.0
    BLOCK_SIZE: int = 2048  # 双重求和的行块大小

    # 带宽选择
    MIN_CV_SAMPLE: int = 20
    TIE_WARNING_FRACTION: float = 0.10
    OPTIMIZER_RTOL: float = 1e-8
    OPTIMIZER_ITER_PER_PARAM: int = 500

    # 参数模型
    BIVARIATE_STARTS: int = 3
    DEVIANCE_LEVEL: float = 0.05
    DEPENDENCE_CONVENTION: Literal["evd", "literal"] = "evd"

    # 模拟实验
    DEFAULT_SEED: int = 20240101
    UNIVARIATE_REPLICATES: int = 100
    BIVARIATE_REPLICATES: int = 50
    MAX_FAILURE_RATE: float = 0.05
    THREADS: int = 0  # 0 表示使用全部CPU核心

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
    )

    @computed_field
    @property
    def N_JOBS(self) -> int:
        """实际并行的工作进程数"""
        if self.THREADS > 0:
            return self.THREADS
        return os.cpu_count() or 1

    @computed_field
    @property
    def GRID_POINTS(self) -> Dict[int, int]:
        """按维数索引的默认网格节点数"""
        return {1: self.GRID_POINTS_1D, 2: self.GRID_POINTS_2D, 3: self.GRID_POINTS_3D}


# 创建全局设置对象
settings = Settings()
