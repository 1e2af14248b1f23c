import argparse

from ..core.data import read_csv
from ..core.errors import CONVERGENCE_EXIT_CODE, ConfigError
from ..schemas.fit import TailReport, ThresholdEntry
from ..services.estimators import fit_tail, get_estimator
from ..services.kde import fit_count, tail_quantile
from ..services.tailindex import threshold_region
from .common import (
    DEFAULT_QUANTILE,
    add_common_arguments,
    add_grid_arguments,
    config_echo,
    emit,
    grid_schema,
    require,
)

TAIL_PROBS = (0.5, 0.9, 0.99)


def register(subparsers) -> None:
    parser = subparsers.add_parser("tail", help="拟合一次, 在多个阈值上报告尾部密度")
    parser.add_argument("--input", default=None, help="样本 CSV")
    parser.add_argument("--cols", nargs="+", default=None, help="选取的列名或列号")
    parser.add_argument("--estimator", default="kpi", help="估计器标识")
    parser.add_argument("--threshold-quantile", type=float, nargs="+", default=None,
                        help="一个或多个阈值分位数水平")
    parser.add_argument("--no-grid", action="store_true", default=False, help="不输出网格值")
    add_grid_arguments(parser)
    add_common_arguments(parser)
    parser.set_defaults(func=run)


def run(args: argparse.Namespace) -> int:
    """
    tail 子命令: 在最低阈值上拟合, 其余阈值只重新计算归一化常数
    """
    data = read_csv(require(args.input, "--input"), args.cols)
    levels = sorted(args.threshold_quantile or [DEFAULT_QUANTILE])
    if len(set(levels)) != len(levels):
        raise ConfigError("threshold quantiles must be distinct")

    start = fit_count()
    base = threshold_region(data, quantile_level=levels[0])
    fit = fit_tail(args.estimator, data, base, points=args.grid, diag=args.diag)
    estimator = get_estimator(args.estimator)

    entries = []
    for level in levels:
        if level == levels[0]:
            current = fit
        else:
            region = base.with_threshold(threshold_region(data, quantile_level=level).u, level)
            current = estimator.retarget(fit, region, points=args.grid)
        quantiles = {}
        if data.d == 1:
            quantiles = {str(p): tail_quantile(current.tail, p) for p in TAIL_PROBS}
        entries.append(ThresholdEntry(
            threshold=current.region.u.tolist(),
            quantile_level=level,
            normalizer=current.normalizer,
            tail_quantiles=quantiles,
            grid=None if args.no_grid else grid_schema(current.tail.grid),
        ))

    report = TailReport(config=config_echo(args), estimator=args.estimator, fit_count=fit_count() - start,
                        thresholds=entries)
    emit(report, args, f"{len(entries)} 个阈值")
    return 0 if fit.converged else CONVERGENCE_EXIT_CODE
