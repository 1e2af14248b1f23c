import argparse

from ..core.data import read_csv
from ..core.errors import CONVERGENCE_EXIT_CODE
from ..core.logging import logger
from ..schemas.fit import FitReport
from ..services.estimators import fit_tail
from .common import (
    add_common_arguments,
    add_grid_arguments,
    add_threshold_arguments,
    config_echo,
    emit,
    grid_schema,
    region_from_args,
    require,
    selector_schema,
)


def register(subparsers) -> None:
    parser = subparsers.add_parser("fit", help="拟合一个尾部密度估计器")
    parser.add_argument("--input", default=None, help="样本 CSV")
    parser.add_argument("--cols", nargs="+", default=None, help="选取的列名或列号")
    parser.add_argument("--estimator", default="kpi", help="估计器标识, 如 kpi、kns*、hist、gpd+")
    add_threshold_arguments(parser)
    add_grid_arguments(parser)
    add_common_arguments(parser)
    parser.set_defaults(func=run)


def run(args: argparse.Namespace) -> int:
    """
    fit 子命令

    Returns:
        int: 0 成功, 3 拟合未收敛
    """
    data = read_csv(require(args.input, "--input"), args.cols)
    region = region_from_args(data, args)
    fit = fit_tail(args.estimator, data, region, points=args.grid, diag=args.diag)

    details = fit.details
    report = FitReport(
        config=config_echo(args),
        estimator=args.estimator,
        n=data.n,
        d=data.d,
        threshold=region.u.tolist(),
        offset=region.u0.tolist(),
        quantile_level=region.quantile_level,
        normalizer=fit.normalizer,
        converged=fit.converged,
        bandwidth=selector_schema(fit.selector),
        binwidths=details.get("binwidths"),
        parameters={k: v for k, v in details.items() if k in ("family", "params", "margins", "loglik")} or None,
        grid=grid_schema(fit.tail.grid),
    )
    emit(report, args, f"{args.estimator} 拟合完成")
    if not fit.converged:
        logger.warning(f"{args.estimator} 拟合未收敛")
        return CONVERGENCE_EXIT_CODE
    return 0
