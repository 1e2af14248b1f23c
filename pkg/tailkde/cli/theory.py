import argparse
from dataclasses import asdict

from ..core.config import settings
from ..core.errors import CONVERGENCE_EXIT_CODE, ConfigError
from ..schemas.theory import TheoryCheck, TheoryReport
from ..services.theory import run_theory_checks
from .common import add_common_arguments, config_echo, emit


def register(subparsers) -> None:
    parser = subparsers.add_parser("verify-theory", help="偏差/方差首项与收敛速度的数值检查")
    parser.add_argument("--quick", action="store_true", default=False, help="跳过 Monte Carlo 检查")
    parser.add_argument("--replicates", type=int, default=500, help="偏差/方差检查的重复次数")
    parser.add_argument("--rate-replicates", type=int, default=100, help="收敛速度检查每个样本量的重复次数")
    parser.add_argument("--sample-sizes", type=int, nargs="+", default=[500, 1000, 2000, 4000, 8000],
                        help="收敛速度检查的样本量")
    parser.add_argument("--seed", type=int, default=None, help="随机种子")
    add_common_arguments(parser)
    parser.set_defaults(func=run)


def run(args: argparse.Namespace) -> int:
    """
    verify-theory 子命令

    Returns:
        int: 0 全部通过, 3 有检查未通过
    """
    if args.replicates < 2 or args.rate_replicates < 1:
        raise ConfigError("replicate counts must be positive (at least two for the bias/variance check)")
    if args.seed is None:
        args.seed = settings.DEFAULT_SEED
    checks = run_theory_checks(args.seed, monte_carlo=not args.quick, replicates=args.replicates,
                               rate_replicates=args.rate_replicates, sample_sizes=args.sample_sizes,
                               n_jobs=settings.N_JOBS)
    models = [TheoryCheck(**asdict(check)) for check in checks]
    passed = all(check.passed for check in models)
    emit(TheoryReport(config=config_echo(args), passed=passed, checks=models), args,
         "全部检查通过" if passed else "部分检查未通过")
    return 0 if passed else CONVERGENCE_EXIT_CODE
