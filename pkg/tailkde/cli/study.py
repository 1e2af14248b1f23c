import argparse
from pathlib import Path

import pandas as pd
from pydantic import ValidationError

from ..core.config import settings
from ..core.errors import CONVERGENCE_EXIT_CODE, ConfigError
from ..core.logging import logger
from ..schemas.study import ExperimentConfig, StudyReport
from ..services.study_service import run_study
from ..utils.response import write_frame_csv
from .common import add_common_arguments, config_echo, emit


def register(subparsers) -> None:
    parser = subparsers.add_parser("study", help="运行模拟研究")
    parser.add_argument("--experiment", default="univariate",
                        help="univariate 或 bivariate(也可写 1d / 2d)")
    parser.add_argument("--preset", default=None, choices=["n500", "n1000", "n2000"], help="一元样本量预设")
    parser.add_argument("--n", type=int, default=None, help="样本量")
    parser.add_argument("--replicates", type=int, default=None, help="重复次数")
    parser.add_argument("--seed", type=int, default=None, help="随机种子")
    parser.add_argument("--targets", nargs="+", default=None, help="模拟目标简称")
    parser.add_argument("--estimators", nargs="+", default=None, help="计算误差的估计器")
    parser.add_argument("--references", nargs="+", default=None, help="模型选择的参考估计器")
    parser.add_argument("--index", nargs="+", default=["l2"], choices=["l1", "l2"], help="损失")
    parser.add_argument("--quantile-level", type=float, default=None, help="阈值分位数水平")
    parser.add_argument("--grid", type=int, default=None, help="每轴网格节点数")
    parser.add_argument("--diag", action="store_true", default=False, help="带宽矩阵限制为对角阵")
    parser.add_argument("--convention", default=None, choices=["evd", "literal"], help="依赖参数约定")
    parser.add_argument("--plot-dir", default=None, help="绘图数据 CSV 与文本表格的输出目录")
    add_common_arguments(parser)
    parser.set_defaults(func=run)


def experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    """
    由命令行参数构造实验配置

    Raises:
        ConfigError: 配置无效
    """
    values = {
        "experiment": args.experiment, "preset": args.preset, "n": args.n, "replicates": args.replicates,
        "seed": settings.DEFAULT_SEED if args.seed is None else args.seed,
        "targets": args.targets, "estimators": args.estimators, "references": args.references,
        "index": args.index, "quantile_level": args.quantile_level, "points": args.grid, "diag": args.diag,
        "convention": args.convention or settings.DEPENDENCE_CONVENTION,
    }
    try:
        return ExperimentConfig(**values)
    except ValidationError as exc:
        raise ConfigError(f"invalid experiment configuration: {exc.errors()[0]['msg']}") from exc


def write_plot_data(report: StudyReport, directory: str) -> None:
    """绘图数据写 CSV, 表格写文本"""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    for name, table in report.tables.items():
        (out / f"table_{name.replace(' ', '_').replace('*', 'star').replace('^', 'hat')}.txt").write_text(
            table + "\n", encoding="utf-8")

    plots = report.plots
    for target, curves in plots.get("curves", {}).items():
        write_frame_csv(pd.DataFrame(curves), out / f"density_{target}.csv")
    for target, qq in plots.get("qq", {}).items():
        write_frame_csv(pd.DataFrame(qq), out / f"qq_{target}.csv")
    for target, per in report.errors.items():
        frame = pd.DataFrame({token: summary["values"] for token, summary in per.items()})
        write_frame_csv(frame, out / f"log_l2_{target}.csv")
    for target, sets in plots.get("level_sets", {}).items():
        rows = []
        for estimator, entry in sets["estimators"].items():
            for prob, lines in entry["contours"].items():
                for k, line in enumerate(lines):
                    rows.extend({"estimator": estimator, "prob": prob, "line": k, "x1": x1, "x2": x2}
                                for x1, x2 in line)
        write_frame_csv(pd.DataFrame(rows, columns=["estimator", "prob", "line", "x1", "x2"]),
                        out / f"contours_{target}.csv")
    logger.info(f"绘图数据已写入 {out}")


def run(args: argparse.Namespace) -> int:
    """
    study 子命令

    Returns:
        int: 0 成功, 3 失败率超过上限
    """
    cfg = experiment_config(args)
    echo = config_echo(args)
    echo["experiment"] = cfg.model_dump(mode="json")
    report = run_study(cfg, n_jobs=settings.N_JOBS, config_echo=echo)
    for name, table in report.tables.items():
        logger.info(f"{name}\n{table}")
    if args.plot_dir:
        write_plot_data(report, args.plot_dir)
    emit(report, args, "模拟研究完成" if report.passed else "失败率超过上限")
    return 0 if report.passed else CONVERGENCE_EXIT_CODE
