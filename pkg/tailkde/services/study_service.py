"""
模拟研究

一元研究: 每个目标、每个重复抽样 n 个观测, 阈值取 95% 样本分位数,
拟合全部估计器并计算相对真实尾部密度的 log L2 误差, 再以各参考估计
对 FRE/GUM/GPD 做模型选择(先做 Gumbel/Fréchet 偏差检验)。
二元研究: 阈值取 90% 边缘分位数, 以 hist / kpi / kpi* 为参考对 BIL/ANL/HR 做模型选择,
并记录每个 (真实模型, 拟合模型, 指标) 的平均 L2。
"""

from collections import Counter
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from matplotlib.figure import Figure

from ..core.config import settings
from ..core.data import DataMatrix, TailRegion
from ..core.errors import DataError, EstimationError, TailKdeError
from ..core.grid import DensityGrid, make_grid
from ..core.logging import logger
from ..core.rng import RngStream
from ..models.enums import BIVARIATE_CANDIDATES, UNIVARIATE_CANDIDATES, Loss, index_kind
from ..schemas.study import ExperimentConfig, FailureSummary, StudyReport
from ..worker.tasks import ReplicateOutcome, failure_rate, run_replicates
from .estimators import fit_tail
from .estimators.base import TailFit
from .kde import tail_from_density, tail_quantile, tail_upper
from .parametric.univariate import deviance_gumbel_vs_frechet
from .sampling import TargetSpec, bivariate_targets, sample, univariate_targets
from .tailindex import select_model, tail_index, threshold_region

QQ_LEVELS = (0.95, 0.96, 0.97, 0.98, 0.99, 0.995, 0.999)
LEVEL_SET_TOKENS = ("hist", "kpi", "kpi*")
NORMALIZATION_TOL = 0.05


def highest_density_levels(grid: DensityGrid, probs: Sequence[float]) -> List[float]:
    """
    最高密度水平集的密度阈值: mass{f >= c} = p

    节点质量 = 密度 × 求积权重, 按密度降序累加。

    Args:
        grid: 带密度值的网格, 总质量应接近 1
        probs: 概率水平

    Returns:
        List[float]: 每个 p 对应的密度阈值, p = 1 时为 0

    Raises:
        DataError: 网格无密度值或总质量偏离 1 超过 5%
    """
    if grid.values is None:
        raise DataError("grid carries no density values")
    values = grid.values.reshape(-1)
    mass = values * grid.weights.reshape(-1)
    total = float(np.sum(mass))
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise DataError(f"grid mass {total:.4g} is not normalized")
    order = np.argsort(-values, kind="stable")
    cumulative = np.cumsum(mass[order]) / total
    levels = []
    for p in probs:
        if not 0 < p <= 1:
            raise DataError(f"probability {p} must lie in (0, 1]")
        if p >= 1.0:
            levels.append(0.0)
            continue
        position = min(int(np.searchsorted(cumulative, p, side="left")), values.size - 1)
        levels.append(float(values[order][position]))
    return levels


def contour_lines(grid: DensityGrid, levels: Sequence[float]) -> Dict[float, List[List[List[float]]]]:
    """
    二维网格上给定密度水平的等值线折线(matplotlib 仅用于提取, 不绘制)

    Returns:
        Dict[float, list]: 水平 -> 折线列表, 每条折线为 [[x1, x2], ...]
    """
    if grid.d != 2:
        raise DataError("contour lines need a two-dimensional grid")
    unique = sorted({float(level) for level in levels if level > 0})
    if not unique:
        return {}
    x, y = grid.axes
    z = grid.values.reshape(grid.shape)
    # 不经过 pyplot, 不需要图形后端
    ax = Figure().subplots()
    contours = ax.contour(x, y, z.T, levels=unique)
    return {float(level): [segment.tolist() for segment in segments]
            for level, segments in zip(contours.levels, contours.allsegs)}


def _fit_all(tokens: Sequence[str], data: DataMatrix, region: TailRegion, cfg: ExperimentConfig,
             required: Sequence[str]) -> Dict[str, TailFit]:
    """拟合全部估计器; required 中的估计器失败或参数模型未收敛时整个重复失败"""
    fits: Dict[str, TailFit] = {}
    for token in tokens:
        try:
            fits[token] = fit_tail(token, data, region, points=cfg.points, diag=cfg.diag)
        except TailKdeError as exc:
            if token in required:
                raise
            logger.warning(f"{token} 拟合失败: {exc}")
    for token in required:
        if not fits[token].converged:
            raise EstimationError(f"{token} fit did not converge")
    return fits


def _select(candidates, fits: Dict[str, TailFit], cfg: ExperimentConfig):
    """对每个参考估计和损失做模型选择, 返回 胜出者 与 指标值"""
    winners: Dict[str, str] = {}
    values: Dict[str, Dict[str, float]] = {}
    for reference in cfg.references:
        if reference not in fits:
            continue
        for loss in cfg.index:
            kind = index_kind(reference, loss).value
            result = select_model(candidates, fits[reference].tail, loss)
            winners[kind] = result.winner_name
            values[kind] = {report.candidate: report.value for report in result.reports}
    return winners, values


def univariate_replicate(rng: RngStream, spec: TargetSpec, cfg: ExperimentConfig) -> Dict[str, Any]:
    """
    一元研究的一个重复

    Returns:
        Dict[str, Any]: log_l2 (估计器 -> log L2), winners (指标 -> 胜出候选),
            use_frechet, qq (估计器 -> 各水平的尾部分位数)
    """
    data = sample(spec, cfg.n, rng)
    region = threshold_region(data, quantile_level=cfg.quantile_level)
    truth = spec.model().tail(region.u)
    required = [*UNIVARIATE_CANDIDATES, *cfg.references]
    fits = _fit_all(cfg.fitted_tokens(), data, region, cfg, required)

    log_l2 = {}
    qq = {}
    for token in cfg.estimators:
        if token not in fits:
            continue
        log_l2[token] = float(np.log(tail_index(truth, fits[token].tail, Loss.L2, name=token).value))
        qq[token] = [_level_quantile(fits[token], level, cfg.quantile_level) for level in QQ_LEVELS]

    # 形状参数不显著时 Fréchet 不参与比较
    guard = deviance_gumbel_vs_frechet(data)
    candidates = [(name, fits[name].tail) for name in UNIVARIATE_CANDIDATES
                  if name != "fre" or guard.use_frechet]
    winners, _ = _select(candidates, fits, cfg)
    return {"log_l2": log_l2, "winners": winners, "use_frechet": guard.use_frechet, "qq": qq}


def _level_quantile(fit: TailFit, level: float, threshold_level: float) -> float:
    """全分布的 level 分位数: 阈值以上按尾部密度求条件分位数"""
    p = (level - threshold_level) / (1.0 - threshold_level)
    if p <= 0:
        return float(fit.region.u[0])
    return tail_quantile(fit.tail, p)


def bivariate_replicate(rng: RngStream, spec: TargetSpec, cfg: ExperimentConfig) -> Dict[str, Any]:
    """
    二元研究的一个重复

    Returns:
        Dict[str, Any]: winners (指标 -> 胜出候选), values (指标 -> 候选 -> L2)
    """
    data = sample(spec, cfg.n, rng)
    region = threshold_region(data, quantile_level=cfg.quantile_level)
    required = [*BIVARIATE_CANDIDATES, *cfg.references]
    fits = _fit_all(cfg.fitted_tokens(), data, region, cfg, required)
    candidates = [(name, fits[name].tail) for name in BIVARIATE_CANDIDATES]
    winners, values = _select(candidates, fits, cfg)
    return {"winners": winners, "values": values}


def _failure_summary(outcomes: List[ReplicateOutcome]) -> FailureSummary:
    failed = [o for o in outcomes if not o.success]
    return FailureSummary(replicates=len(outcomes), failed=len(failed), rate=failure_rate(outcomes),
                          messages=sorted({o.error for o in failed if o.error}))


def _proportions(results: List[Dict[str, Any]], label: str):
    """每种指标下各候选胜出的比例, 以及正确选择比例"""
    kinds = sorted({kind for r in results for kind in r["winners"]})
    selection, correct = {}, {}
    for kind in kinds:
        picks = [r["winners"][kind] for r in results if kind in r["winners"]]
        counts = Counter(picks)
        selection[kind] = {name: counts[name] / len(picks) for name in sorted(counts)}
        correct[kind] = counts[label] / len(picks)
    return selection, correct


def _summarize(values: Sequence[float]) -> Dict[str, Any]:
    array = np.asarray(values, dtype=float)
    q1, median, q3 = np.percentile(array, [25, 50, 75])
    return {"mean": float(np.mean(array)), "median": float(median), "q1": float(q1), "q3": float(q3),
            "values": array.tolist()}


def _check_failures(failures: Dict[str, FailureSummary]) -> bool:
    passed = True
    for label, summary in failures.items():
        if summary.rate > settings.MAX_FAILURE_RATE:
            logger.warning(f"{label}: 失败率 {summary.rate:.1%} 超过上限 {settings.MAX_FAILURE_RATE:.0%}")
            passed = False
    return passed


def selection_table(correct: Dict[str, Dict[str, float]], targets: Sequence[str]) -> str:
    """正确选择比例表: 行为真实模型, 列为指标类型"""
    frame = pd.DataFrame({target.upper(): correct.get(target, {}) for target in targets}).T
    return frame.sort_index(axis=1).to_string(float_format=lambda v: f"{v:.2f}", na_rep="-")


def winner_table(selection: Dict[str, Dict[str, Dict[str, float]]], kind: str) -> str:
    """某一指标下的胜出分布: 行为真实模型, 列为拟合模型"""
    frame = pd.DataFrame({target.upper(): selection[target].get(kind, {}) for target in selection}).T
    frame.columns = [c.upper() for c in frame.columns]
    return frame.fillna(0.0).to_string(float_format=lambda v: f"{v:.2f}")


def mean_index_table(mean_index: Dict[str, Dict[str, Dict[str, float]]]) -> str:
    """平均 L2 表: 行为 (真实模型, 拟合模型), 列为指标类型"""
    rows = {(true.upper(), fitted.upper()): kinds
            for true, fitted_map in mean_index.items() for fitted, kinds in fitted_map.items()}
    frame = pd.DataFrame(rows).T
    frame.index.names = ["true", "fitted"]
    return frame.sort_index(axis=1).to_string(float_format=lambda v: f"{v:.4g}")


def error_table(errors: Dict[str, Dict[str, Dict[str, Any]]]) -> str:
    """log L2 误差中位数: 行为估计器, 列为真实模型"""
    frame = pd.DataFrame({target.upper(): {token: s["median"] for token, s in per.items()}
                          for target, per in errors.items()})
    return frame.to_string(float_format=lambda v: f"{v:.3f}")


def density_curves(spec: TargetSpec, cfg: ExperimentConfig, seed: int) -> Dict[str, List[float]]:
    """第一个重复样本上真实尾部密度与各估计的曲线"""
    data = sample(spec, cfg.n, RngStream(seed, 0))
    region = threshold_region(data, quantile_level=cfg.quantile_level)
    grid = make_grid(region, tail_upper(data, region), cfg.points)
    x = grid.points()
    curves = {"x": x[:, 0].tolist(), "target": spec.model().tail(region.u).density(x).tolist()}
    for token in cfg.estimators:
        try:
            curves[token] = fit_tail(token, data, region, points=cfg.points, diag=cfg.diag).density(x).tolist()
        except TailKdeError as exc:
            logger.warning(f"{token} 曲线计算失败: {exc}")
    return curves


def level_sets(spec: TargetSpec, cfg: ExperimentConfig, seed: int) -> Dict[str, Any]:
    """第一个重复样本上真实尾部密度和 hist / kpi / kpi* 的最高密度水平集"""
    data = sample(spec, cfg.n, RngStream(seed, 0))
    region = threshold_region(data, quantile_level=cfg.quantile_level)
    tails = {"target": tail_from_density(spec.model(), region, tail_upper(data, region), cfg.points,
                                         estimator_id="target")}
    for token in LEVEL_SET_TOKENS:
        tails[token] = fit_tail(token, data, region, points=cfg.points, diag=cfg.diag).tail
    out = {"threshold": region.u.tolist(), "probs": list(cfg.level_probs), "estimators": {}}
    for name, tail in tails.items():
        levels = highest_density_levels(tail.grid, cfg.level_probs)
        lines = contour_lines(tail.grid, levels)
        out["estimators"][name] = {
            "levels": levels,
            "contours": {str(p): lines.get(float(level), []) for p, level in zip(cfg.level_probs, levels)},
        }
    return out


def run_univariate_study(cfg: ExperimentConfig, n_jobs: Optional[int] = None,
                         config_echo: Optional[Dict[str, Any]] = None) -> StudyReport:
    """
    一元模拟研究

    Args:
        cfg: 实验配置
        n_jobs: 并行进程数
        config_echo: 写入报告的完整配置

    Returns:
        StudyReport: 选择比例、log L2 误差、qq 数据和密度曲线
    """
    targets = univariate_targets()
    failures, selection, correct, errors, qq, curves = {}, {}, {}, {}, {}, {}
    beats_histogram, frechet_rate = {}, {}
    for k, label in enumerate(cfg.targets):
        spec = targets[label]
        seed = cfg.seed + k
        logger.info(f"一元研究: 目标 {label}, n={cfg.n}, {cfg.replicates} 个重复")
        outcomes = run_replicates(univariate_replicate, cfg.replicates, seed, spec, cfg, n_jobs=n_jobs)
        failures[label] = _failure_summary(outcomes)
        results = [o.result for o in outcomes if o.success]
        if not results:
            continue
        selection[label], correct[label] = _proportions(results, label)
        frechet_rate[label] = float(np.mean([r["use_frechet"] for r in results]))
        tokens = [t for t in cfg.estimators if all(t in r["log_l2"] for r in results)]
        errors[label] = {t: _summarize([r["log_l2"][t] for r in results]) for t in tokens}
        if label in tokens and "hist" in tokens:
            wins = [r["log_l2"][label] < r["log_l2"]["hist"] for r in results]
            beats_histogram[label] = float(np.mean(wins))
        truth = spec.model().quantile(np.array(QQ_LEVELS))
        qq[label] = {"levels": list(QQ_LEVELS), "target": np.asarray(truth).tolist(),
                     **{t: np.mean([r["qq"][t] for r in results], axis=0).tolist() for t in tokens}}
        curves[label] = density_curves(spec, cfg, seed)

    tables = {"selection": selection_table(correct, cfg.targets)}
    if errors:
        tables["log_l2_median"] = error_table(errors)
    report = StudyReport(
        config=config_echo or cfg.model_dump(mode="json"),
        experiment="univariate",
        passed=_check_failures(failures),
        failures=failures,
        selection=selection,
        correct_selection=correct,
        errors=errors,
        plots={"qq": qq, "curves": curves, "parametric_beats_histogram": beats_histogram,
               "deviance_frechet_rate": frechet_rate},
        tables=tables,
    )
    return report


def run_bivariate_study(cfg: ExperimentConfig, n_jobs: Optional[int] = None,
                        config_echo: Optional[Dict[str, Any]] = None) -> StudyReport:
    """
    二元模拟研究

    Returns:
        StudyReport: 选择比例、平均 L2 和水平集数据
    """
    targets = bivariate_targets(cfg.convention)
    failures, selection, correct, mean_index, levels = {}, {}, {}, {}, {}
    for k, label in enumerate(cfg.targets):
        spec = targets[label]
        seed = cfg.seed + k
        logger.info(f"二元研究: 目标 {label}, n={cfg.n}, {cfg.replicates} 个重复")
        outcomes = run_replicates(bivariate_replicate, cfg.replicates, seed, spec, cfg, n_jobs=n_jobs)
        failures[label] = _failure_summary(outcomes)
        results = [o.result for o in outcomes if o.success]
        if not results:
            continue
        selection[label], correct[label] = _proportions(results, label)
        kinds = sorted({kind for r in results for kind in r["values"]})
        mean_index[label] = {
            fitted: {kind: float(np.mean([r["values"][kind][fitted] for r in results
                                          if fitted in r["values"].get(kind, {})]))
                     for kind in kinds}
            for fitted in BIVARIATE_CANDIDATES
        }
        try:
            levels[label] = level_sets(spec, cfg, seed)
        except TailKdeError as exc:
            logger.warning(f"{label} 水平集计算失败: {exc}")

    tables = {"selection": selection_table(correct, cfg.targets)}
    for kind in sorted({kind for per in selection.values() for kind in per}):
        tables[f"winners {kind}"] = winner_table(selection, kind)
    if mean_index:
        tables["mean_l2"] = mean_index_table(mean_index)
    return StudyReport(
        config=config_echo or cfg.model_dump(mode="json"),
        experiment="bivariate",
        passed=_check_failures(failures),
        failures=failures,
        selection=selection,
        correct_selection=correct,
        mean_index=mean_index,
        plots={"level_sets": levels},
        tables=tables,
    )


def run_study(cfg: ExperimentConfig, n_jobs: Optional[int] = None,
              config_echo: Optional[Dict[str, Any]] = None) -> StudyReport:
    if cfg.experiment == "univariate":
        return run_univariate_study(cfg, n_jobs=n_jobs, config_echo=config_echo)
    return run_bivariate_study(cfg, n_jobs=n_jobs, config_echo=config_echo)
