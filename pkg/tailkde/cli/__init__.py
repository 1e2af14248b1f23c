# 命令行包初始化文件
import argparse
import sys
from typing import Dict, List, Optional, Tuple

from ..core.config import settings
from ..core.errors import TailKdeError
from ..core.logging import logger
from ..utils.response import error_response, write_json
from . import compare, fit, select, simulate, study, tail, theory
from .common import CliParser, apply_settings, load_config, resolve

# 子命令模块, 按帮助中的顺序排列
COMMANDS = [fit, tail, select, compare, simulate, study, theory]


def build_parser() -> Tuple[argparse.ArgumentParser, Dict[str, argparse.ArgumentParser]]:
    """
    构建命令行解析器

    Returns:
        主解析器, 以及 子命令名 -> 子解析器 的映射(用于载入配置回显)
    """
    parser = CliParser(prog=settings.APP_NAME, description="变换核密度估计: 中等极值的尾部密度")
    subparsers = parser.add_subparsers(dest="command", parser_class=CliParser)
    for module in COMMANDS:
        module.register(subparsers)
    return parser, dict(subparsers.choices)


def _apply_config_file(argv: List[str], subcommands: Dict[str, argparse.ArgumentParser]) -> None:
    """--config 指定的回显作为对应子命令的默认值, 显式给出的参数仍然优先"""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if not known.config or known.command not in subcommands:
        return
    echo = load_config(known.config)
    apply_settings(echo.get("settings", {}))
    defaults = {k: v for k, v in echo["args"].items() if k != "command"}
    subcommands[known.command].set_defaults(**defaults)
    logger.info(f"已载入配置 {known.config}")


def main(argv: Optional[List[str]] = None) -> int:
    """
    命令行入口

    Returns:
        int: 退出码 0 成功, 2 数据或数值错误, 3 未收敛或检查未通过, 4 配置错误
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subcommands = build_parser()
    try:
        _apply_config_file(argv, subcommands)
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return 4
        resolve(args)
        logger.info(f"运行 {args.command}")
        return args.func(args)
    except TailKdeError as e:
        logger.error(f"{type(e).__name__}: {e.message}")
        write_json(error_response(e.message, e.exit_code, type(e).__name__), stream=sys.stderr)
        return e.exit_code
