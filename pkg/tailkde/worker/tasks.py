from dataclasses import dataclass
from typing import Any, Callable, List, Optional

from joblib import Parallel, delayed

from ..core.config import settings
from ..core.errors import TailKdeError
from ..core.logging import logger
from ..core.rng import RngStream


@dataclass
class ReplicateOutcome:
    """单个重复的结果; 失败时 result 为None"""

    index: int
    success: bool
    result: Any = None
    error: Optional[str] = None


def run_replicate(func: Callable[..., Any], index: int, seed: int, *args) -> ReplicateOutcome:
    """
    执行一个模拟重复

    Args:
        func: 重复函数, 第一个参数为 RngStream
        index: 重复序号, 同时作为 stream_id
        seed: 随机种子
        *args: 传给 func 的其余参数

    Returns:
        ReplicateOutcome: 重复结果, 业务异常被捕获并记录
    """
    try:
        return ReplicateOutcome(index=index, success=True, result=func(RngStream(seed, index), *args))
    except (TailKdeError, FloatingPointError, ArithmeticError) as e:
        logger.warning(f"Replicate {index} failed: {str(e)}")
        return ReplicateOutcome(index=index, success=False, error=str(e))


def run_replicates(func: Callable[..., Any], replicates: int, seed: Optional[int] = None,
                   *args, n_jobs: Optional[int] = None) -> List[ReplicateOutcome]:
    """
    并行执行全部重复, 结果按重复序号排列

    每个重复使用独立的 RngStream(seed, index), 结果与并行进程数无关。
    """
    seed = settings.DEFAULT_SEED if seed is None else seed
    n_jobs = n_jobs or settings.N_JOBS
    logger.info(f"Running {replicates} replicates of {getattr(func, '__name__', func)} with n_jobs={n_jobs}")
    if n_jobs == 1:
        outcomes = [run_replicate(func, index, seed, *args) for index in range(replicates)]
    else:
        outcomes = Parallel(n_jobs=n_jobs)(
            delayed(run_replicate)(func, index, seed, *args) for index in range(replicates)
        )
    return sorted(outcomes, key=lambda outcome: outcome.index)


def failure_rate(outcomes: List[ReplicateOutcome]) -> float:
    if not outcomes:
        return 0.0
    return sum(not outcome.success for outcome in outcomes) / len(outcomes)
