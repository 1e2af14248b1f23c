"""子命令共用的参数、配置回显与输出"""

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, Optional

from ..core.config import settings
from ..core.data import DataMatrix, TailRegion
from ..core.errors import ConfigError, DataError
from ..core.logging import setup_logging
from ..schemas.fit import GridSchema, SelectorResultSchema
from ..services.tailindex import threshold_region
from ..utils.response import success_response, write_json

DEFAULT_QUANTILE = 0.95
# 不进入配置回显的解析结果
_INTERNAL_ARGS = {"func", "config"}


class CliParser(argparse.ArgumentParser):
    """参数错误按配置错误处理(退出码 4), 并打印用法"""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="回显的配置 JSON, 作为参数默认值")
    parser.add_argument("--threads", type=int, default=None, help="并行进程数, 0 表示全部核心")
    parser.add_argument("--log-level", default=None, choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    parser.add_argument("--output", default=None, help="输出 JSON 路径, 缺省写到 stdout")


def add_threshold_arguments(parser: argparse.ArgumentParser, multiple: bool = False) -> None:
    nargs = "+" if multiple else None
    parser.add_argument("--threshold-quantile", type=float, nargs=nargs, default=None,
                        help="阈值取样本分位数")
    parser.add_argument("--threshold", type=float, nargs="+", default=None,
                        help="绝对阈值, 每个边缘一个值(单个值对所有边缘通用)")


def add_grid_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--grid", type=int, default=None, help="每轴网格节点数")
    parser.add_argument("--diag", action="store_true", default=False, help="带宽矩阵限制为对角阵")


def load_config(path: str) -> Dict[str, Any]:
    """
    读取配置回显: 裸配置对象, 或者带 config 字段的报告(可嵌套在 results 中)

    Raises:
        DataError: 文件不存在或不是 JSON
        ConfigError: 文件中没有配置
    """
    file = Path(path)
    if not file.is_file():
        raise DataError(f"config file not found: {file}")
    try:
        content = json.loads(file.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"cannot parse config file {file}: {exc}") from exc
    if isinstance(content, dict) and isinstance(content.get("results"), dict):
        content = content["results"]
    if isinstance(content, dict) and isinstance(content.get("config"), dict):
        content = content["config"]
    if not isinstance(content, dict) or "args" not in content:
        raise ConfigError(f"{file} does not contain a configuration echo")
    return content


def apply_settings(values: Dict[str, Any]) -> None:
    """把回显中的设置写回全局 settings, 计算字段被忽略"""
    for name, value in values.items():
        if name in type(settings).model_fields:
            setattr(settings, name, value)


def resolve(args: argparse.Namespace) -> None:
    """命令行参数覆盖设置并重新配置日志"""
    if args.threads is not None:
        if args.threads < 0:
            raise ConfigError("--threads must be non-negative")
        settings.THREADS = args.threads
    if args.log_level:
        settings.LOG_LEVEL = args.log_level
    setup_logging(settings.LOG_LEVEL)


def config_echo(args: argparse.Namespace) -> Dict[str, Any]:
    """完整的解析后配置: 命令行参数(含默认值)与全部设置"""
    arguments = {k: v for k, v in vars(args).items() if k not in _INTERNAL_ARGS}
    return {"args": arguments, "settings": settings.model_dump(mode="json")}


def region_from_args(data: DataMatrix, args: argparse.Namespace, index: int = 0) -> TailRegion:
    """
    由阈值参数构造尾部区域; 两者都未给出时取 95% 分位数

    Raises:
        ConfigError: 同时给出分位数和绝对阈值
    """
    quantile = args.threshold_quantile
    if isinstance(quantile, list):
        quantile = quantile[index]
    if quantile is not None and args.threshold is not None:
        raise ConfigError("give either --threshold-quantile or --threshold, not both")
    if quantile is None and args.threshold is None:
        quantile = DEFAULT_QUANTILE
    return threshold_region(data, quantile, args.threshold)


def grid_schema(grid) -> GridSchema:
    return GridSchema(axes=[axis.tolist() for axis in grid.axes], values=grid.values.tolist())


def selector_schema(result) -> Optional[SelectorResultSchema]:
    if result is None:
        return None
    return SelectorResultSchema(
        selector=result.selector.value,
        H=result.H.tolist(),
        objective_value=result.objective_value,
        iterations=result.iterations,
        converged=result.converged,
        pilot_G=result.pilot_G.tolist() if result.pilot_G is not None else None,
        fallback=result.fallback,
    )


def emit(report, args: argparse.Namespace, message: str) -> None:
    write_json(success_response(report, message), args.output)


def require(value, flag: str):
    if value is None or value == []:
        raise ConfigError(f"{flag} is required")
    return value
