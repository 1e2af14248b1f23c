import argparse

from ..core.data import read_csv
from ..core.errors import TailKdeError
from ..core.logging import logger
from ..models.enums import BIVARIATE_CANDIDATES, UNIVARIATE_CANDIDATES, Loss
from ..schemas.fit import IndexEntry, SelectionReport
from ..services.estimators import fit_tail
from ..services.parametric.univariate import deviance_gumbel_vs_frechet
from ..services.tailindex import select_model
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
    parser = subparsers.add_parser("select", help="按尾部指标选择参数模型")
    parser.add_argument("--input", default=None, help="样本 CSV")
    parser.add_argument("--cols", nargs="+", default=None, help="选取的列名或列号")
    parser.add_argument("--reference", default="kpi", help="参考估计器标识(hist、kpi、kpi*、gpd+ 等)")
    parser.add_argument("--index", default="l2", choices=[loss.value for loss in Loss], help="损失")
    parser.add_argument("--no-deviance-guard", action="store_true", default=False,
                        help="一元时不做 Gumbel/Fréchet 偏差检验")
    add_threshold_arguments(parser)
    add_grid_arguments(parser)
    add_common_arguments(parser)
    parser.set_defaults(func=run)


def run(args: argparse.Namespace) -> int:
    """
    select 子命令: d=1 比较 FRE/GUM/GPD, d=2 比较 BIL/ANL/HR
    """
    data = read_csv(require(args.input, "--input"), args.cols)
    region = region_from_args(data, args)
    reference = fit_tail(args.reference, data, region, points=args.grid, diag=args.diag)

    names = list(UNIVARIATE_CANDIDATES if data.d == 1 else BIVARIATE_CANDIDATES)
    deviance = None
    if data.d == 1 and not args.no_deviance_guard:
        guard = deviance_gumbel_vs_frechet(data)
        deviance = {"statistic": guard.statistic, "pvalue": guard.pvalue, "xi": guard.xi,
                    "use_frechet": guard.use_frechet}
        if not guard.use_frechet:
            names.remove("fre")

    candidates, failed = [], []
    for name in names:
        try:
            candidates.append((name, fit_tail(name, data, region, points=args.grid).tail))
        except TailKdeError as exc:
            logger.warning(f"候选 {name} 拟合失败: {exc}")
            failed.append(IndexEntry(candidate=name, error=str(exc)))

    result = select_model(candidates, reference.tail, Loss(args.index))
    ranking = sorted(
        (IndexEntry(candidate=r.candidate, index_kind=r.index_kind.value if r.index_kind else None, value=r.value)
         for r in result.reports),
        key=lambda entry: entry.value,
    )
    ranking += [IndexEntry(candidate=name, error=error) for name, error in result.failures.items()] + failed
    grid = result.reports[0].grid if result.reports else {}
    report = SelectionReport(config=config_echo(args), reference=args.reference, loss=args.index,
                             deviance=deviance, ranking=ranking, winner=result.winner_name, tie=result.tie,
                             grid=grid)
    emit(report, args, f"胜出模型: {result.winner_name}")
    return 0
