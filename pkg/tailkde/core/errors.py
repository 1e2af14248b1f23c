"""异常类型及其对应的命令行退出码"""


class TailKdeError(Exception):
    """所有业务异常的基类"""

    exit_code: int = 1

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class DataError(TailKdeError, ValueError):
    """输入数据无效或退化（空尾部、常数列、NaN 等）"""

    exit_code = 2


class EstimationError(TailKdeError, ArithmeticError):
    """数值计算失败（奇异矩阵、无法括住根等）"""

    exit_code = 2


class ConfigError(TailKdeError, ValueError):
    """配置或估计器标识无效"""

    exit_code = 4


# 未收敛不抛异常, 由命令行根据 converged 标志返回此退出码
CONVERGENCE_EXIT_CODE = 3
