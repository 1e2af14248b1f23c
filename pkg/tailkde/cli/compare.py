import argparse
from pathlib import Path

from ..core.data import read_csv
from ..core.errors import DataError, TailKdeError
from ..core.logging import logger
from ..models.enums import Loss, index_kind
from ..schemas.fit import CompareReport, CompareRow
from ..services.estimators import fit_tail
from ..services.tailindex import fit_modeled_tail, tail_index
from .common import (
    add_common_arguments,
    add_grid_arguments,
    add_threshold_arguments,
    config_echo,
    emit,
    region_from_args,
    require,
)


def register(subparsers) -> None:
    parser = subparsers.add_parser("compare", help="观测数据与模式数据的尾部指标排名")
    parser.add_argument("--observed", default=None, help="观测样本 CSV")
    parser.add_argument("--models", nargs="+", default=None, help="一个或多个模式样本 CSV")
    parser.add_argument("--cols", nargs="+", default=None, help="选取的列名或列号(所有文件相同)")
    parser.add_argument("--estimator", default="kpi", help="估计器标识")
    parser.add_argument("--index", nargs="+", default=["l2"], choices=[loss.value for loss in Loss],
                        help="一个或多个损失")
    add_threshold_arguments(parser)
    add_grid_arguments(parser)
    add_common_arguments(parser)
    parser.set_defaults(func=run)


def run(args: argparse.Namespace) -> int:
    """
    compare 子命令: 每个模式文件一行, 每个损失一列; 单个文件失败不影响其余文件
    """
    observed = read_csv(require(args.observed, "--observed"), args.cols)
    models = require(args.models, "--models")
    losses = [Loss(value) for value in dict.fromkeys(args.index)]
    region = region_from_args(observed, args)
    reference = fit_tail(args.estimator, observed, region, points=args.grid, diag=args.diag)

    rows = []
    for path in models:
        try:
            modeled = read_csv(path, args.cols)
            fit = fit_modeled_tail(modeled, args.estimator, region, points=args.grid, diag=args.diag)
            indices = {}
            for loss in losses:
                report = tail_index(fit.tail, reference.tail, loss, name=path)
                indices[index_kind(args.estimator, loss).value] = report.value
            rows.append(CompareRow(model=path, indices=indices))
        except TailKdeError as exc:
            logger.warning(f"{path} 比较失败: {exc}")
            rows.append(CompareRow(model=path, error=str(exc)))

    scored = [row for row in rows if row.error is None]
    if not scored:
        raise DataError("no model file could be compared")
    winners = {}
    for loss in losses:
        kind = index_kind(args.estimator, loss).value
        # 并列时取命令行中靠前的文件
        winners[kind] = min(scored, key=lambda row: row.indices[kind]).model

    report = CompareReport(config=config_echo(args), observed=str(Path(args.observed)), estimator=args.estimator,
                           threshold=region.u.tolist(), rows=rows, winners=winners)
    emit(report, args, f"{len(rows)} 个模式文件")
    return 0
