"""
一元极值分布: Gumbel、Fréchet、GEV、GPD 的极大似然拟合与 Gumbel/Fréchet 偏差检验
"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy import stats
from scipy.optimize import minimize

from ...core.config import settings
from ...core.data import DataMatrix
from ...core.errors import DataError, EstimationError
from ...core.logging import logger
from ...models.enums import UnivariateFamily

EULER_GAMMA = 0.5772156649015329


@dataclass
class UnivariateEvtFit:
    """
    一元极值分布拟合结果

    frechet: F(x) = exp(-((x-μ)/σ)^{-1/ξ}), x > μ
    gev: F(x) = exp(-(1 + ξ(x-μ)/σ)^{-1/ξ})
    gpd: F(x) = 1 - (1 + ξ(x-μ)/σ)^{-1/ξ}, x > μ
    """

    family: UnivariateFamily
    mu: float
    sigma: float
    xi: Optional[float] = None
    loglik: float = float("nan")
    converged: bool = True
    iterations: int = 0
    n: int = 0
    exceedance: bool = False
    d: int = field(default=1, repr=False)

    def __post_init__(self):
        self.family = UnivariateFamily(self.family)
        if not self.sigma > 0:
            raise DataError(f"scale parameter must be positive, got {self.sigma}")
        if self.family == UnivariateFamily.FRECHET and not (self.xi and self.xi > 0):
            raise DataError("Frechet shape parameter must be positive")

    def dist(self):
        """scipy 冻结分布"""
        if self.family == UnivariateFamily.GUMBEL:
            return stats.gumbel_r(loc=self.mu, scale=self.sigma)
        if self.family == UnivariateFamily.GEV:
            return stats.genextreme(c=-self.xi, loc=self.mu, scale=self.sigma)
        if self.family == UnivariateFamily.FRECHET:
            return stats.invweibull(c=1.0 / self.xi, loc=self.mu, scale=self.sigma)
        return stats.genpareto(c=self.xi, loc=self.mu, scale=self.sigma)

    @property
    def params(self) -> dict:
        out = {"mu": self.mu, "sigma": self.sigma}
        if self.xi is not None:
            out["xi"] = self.xi
        return out

    def density(self, points) -> np.ndarray:
        x = np.atleast_2d(np.asarray(points, dtype=float))[:, 0]
        return self.dist().pdf(x)

    def cdf(self, x) -> np.ndarray:
        return self.dist().cdf(np.asarray(x, dtype=float))

    def survival(self, u) -> float:
        return float(np.asarray(self.dist().sf(np.asarray(u, dtype=float))).reshape(-1)[0])

    def quantile(self, p) -> np.ndarray:
        return self.dist().ppf(p)

    def loglikelihood(self, x) -> float:
        return float(np.sum(self.dist().logpdf(np.asarray(x, dtype=float))))

    def tail(self, u) -> "ParametricTail":
        return ParametricTail(self, np.atleast_1d(np.asarray(u, dtype=float)))


@dataclass(frozen=True, eq=False)
class ParametricTail:
    """参数模型的尾部密度 g(x) / Ḡ(u), 在 (u, ∞)^d 上解析归一"""

    model: object
    u: np.ndarray

    @property
    def d(self) -> int:
        return self.u.size

    @property
    def normalizer(self) -> float:
        return float(self.model.survival(self.u))

    def density(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros(points.shape[0])
        inside = np.all(points > self.u, axis=1)
        norm = self.normalizer
        if norm <= 0:
            raise EstimationError("parametric model has no mass above the threshold")
        if np.any(inside):
            out[inside] = self.model.density(points[inside]) / norm
        return out


def _nelder_mead(negloglik: Callable[[np.ndarray], float], starts: Sequence[np.ndarray], n_params: int):
    best = None
    for start in starts:
        start = np.asarray(start, dtype=float)
        if not np.isfinite(negloglik(start)):
            continue
        result = minimize(negloglik, start, method="Nelder-Mead",
                          options={"maxiter": settings.OPTIMIZER_ITER_PER_PARAM * n_params * 2,
                                   "maxfev": settings.OPTIMIZER_ITER_PER_PARAM * n_params * 4,
                                   "xatol": 1e-8, "fatol": 1e-10})
        if best is None or result.fun < best.fun:
            best = result
    if best is None:
        raise EstimationError("no starting value gives a finite likelihood")
    return best


def _safe(func: Callable[[np.ndarray], float]) -> Callable[[np.ndarray], float]:
    def wrapped(theta):
        with np.errstate(all="ignore"):
            value = func(theta)
        return value if np.isfinite(value) else np.inf
    return wrapped


def _check_sample(x: np.ndarray, minimum: int = 10) -> None:
    if x.size < minimum:
        raise DataError(f"need at least {minimum} observations, got {x.size}")
    if np.ptp(x) <= 0:
        raise DataError("degenerate sample: all observations are equal")


def _gumbel_start(x: np.ndarray) -> np.ndarray:
    scale = np.std(x, ddof=1) * np.sqrt(6.0) / np.pi
    return np.array([np.mean(x) - EULER_GAMMA * scale, np.log(scale)])


def fit_gumbel(x: np.ndarray) -> UnivariateEvtFit:
    def nll(theta):
        return -np.sum(stats.gumbel_r.logpdf(x, loc=theta[0], scale=np.exp(theta[1])))

    result = _nelder_mead(_safe(nll), [_gumbel_start(x)], 2)
    return UnivariateEvtFit(UnivariateFamily.GUMBEL, result.x[0], float(np.exp(result.x[1])),
                            loglik=-result.fun, converged=bool(result.success), iterations=result.nit, n=x.size)


def fit_gev(x: np.ndarray, starts: Optional[List[np.ndarray]] = None) -> UnivariateEvtFit:
    def nll(theta):
        return -np.sum(stats.genextreme.logpdf(x, c=-theta[2], loc=theta[0], scale=np.exp(theta[1])))

    gumbel = _gumbel_start(x)
    starts = starts or [np.append(gumbel, xi) for xi in (0.0, 0.1, -0.1)]
    result = _nelder_mead(_safe(nll), starts, 3)
    return UnivariateEvtFit(UnivariateFamily.GEV, result.x[0], float(np.exp(result.x[1])), float(result.x[2]),
                            loglik=-result.fun, converged=bool(result.success), iterations=result.nit, n=x.size)


def fit_frechet(x: np.ndarray) -> UnivariateEvtFit:
    """三参数 Fréchet: 参数 (μ, log σ, log ξ), 起点取自 ξ > 0 的 GEV 重参数化"""
    def nll(theta):
        xi = np.exp(theta[2])
        return -np.sum(stats.invweibull.logpdf(x, c=1.0 / xi, loc=theta[0], scale=np.exp(theta[1])))

    gev = fit_gev(x)
    starts = []
    for xi in (max(gev.xi, 0.05), 0.25, 0.5):
        sigma = gev.sigma / xi
        mu = min(gev.mu - sigma, x.min() - 0.01 * np.ptp(x))
        starts.append(np.array([mu, np.log(sigma), np.log(xi)]))
    result = _nelder_mead(_safe(nll), starts, 3)
    return UnivariateEvtFit(UnivariateFamily.FRECHET, result.x[0], float(np.exp(result.x[1])),
                            float(np.exp(result.x[2])), loglik=-result.fun, converged=bool(result.success),
                            iterations=result.nit, n=x.size)


def fit_gpd(x: np.ndarray, threshold: Optional[float] = None) -> UnivariateEvtFit:
    """
    GPD 拟合

    threshold 给定时只用超过阈值的观测, 位置参数固定为阈值(GPD+);
    否则用全部样本, 位置参数 μ = min(x) - exp(θ) 保证所有观测在支撑内。
    """
    if threshold is not None:
        excess = x[x > threshold]
        _check_sample(excess)

        def nll(theta):
            return -np.sum(stats.genpareto.logpdf(excess, c=theta[1], loc=threshold, scale=np.exp(theta[0])))

        mean_excess = np.mean(excess - threshold)
        starts = [np.array([np.log(mean_excess), xi]) for xi in (0.1, 0.0, -0.1)]
        result = _nelder_mead(_safe(nll), starts, 2)
        return UnivariateEvtFit(UnivariateFamily.GPD, float(threshold), float(np.exp(result.x[0])),
                                float(result.x[1]), loglik=-result.fun, converged=bool(result.success),
                                iterations=result.nit, n=excess.size, exceedance=True)

    low = x.min()

    def nll(theta):
        return -np.sum(stats.genpareto.logpdf(x, c=theta[2], loc=low - np.exp(theta[0]), scale=np.exp(theta[1])))

    gap = 0.01 * np.ptp(x)
    starts = [np.array([np.log(gap), np.log(np.mean(x - low) + gap), xi]) for xi in (0.1, 0.0, 0.3)]
    result = _nelder_mead(_safe(nll), starts, 3)
    return UnivariateEvtFit(UnivariateFamily.GPD, float(low - np.exp(result.x[0])), float(np.exp(result.x[1])),
                            float(result.x[2]), loglik=-result.fun, converged=bool(result.success),
                            iterations=result.nit, n=x.size)


def fit_univariate(data: DataMatrix, family: UnivariateFamily, threshold: Optional[float] = None) -> UnivariateEvtFit:
    """
    极大似然拟合

    Args:
        data: 一元样本, n >= 10
        family: 分布族
        threshold: 仅对 gpd 有效, 给定时为超阈值 GPD+ 拟合

    Returns:
        UnivariateEvtFit: 拟合结果(未收敛时 converged=False, 返回找到的最优点)

    Raises:
        DataError: 样本不足、退化或维数不为 1
        EstimationError: 所有起点的似然都不是有限值
    """
    if data.d != 1:
        raise DataError("univariate families need d = 1")
    x = data.values[:, 0]
    _check_sample(x)
    family = UnivariateFamily(family)
    if family == UnivariateFamily.GUMBEL:
        fit = fit_gumbel(x)
    elif family == UnivariateFamily.GEV:
        fit = fit_gev(x)
    elif family == UnivariateFamily.FRECHET:
        fit = fit_frechet(x)
    else:
        fit = fit_gpd(x, threshold)
    if not fit.converged:
        logger.warning(f"{family.value} 极大似然未收敛, loglik={fit.loglik:.6g}")
    return fit


@dataclass
class DevianceResult:
    """GEV 与 Gumbel 的嵌套似然比检验"""

    use_frechet: bool
    statistic: float
    pvalue: float
    xi: float
    gumbel: UnivariateEvtFit = field(repr=False)
    gev: UnivariateEvtFit = field(repr=False)


def deviance_gumbel_vs_frechet(data: DataMatrix, level: Optional[float] = None) -> DevianceResult:
    """
    偏差检验: D = 2(ℓ_GEV - ℓ_Gumbel), 与 χ²₁ 比较

    形状参数不显著异于 0 时不采用 Fréchet 模型; 显著且 ξ̂ > 0 时 use_frechet=True。

    Raises:
        EstimationError: 任一拟合的似然不是有限值
    """
    level = settings.DEVIANCE_LEVEL if level is None else level
    x = data.values[:, 0]
    _check_sample(x)
    gumbel = fit_gumbel(x)
    # GEV 从 Gumbel 解出发, 保证嵌套模型的似然不低于 Gumbel
    gev = fit_gev(x, starts=[np.array([gumbel.mu, np.log(gumbel.sigma), xi]) for xi in (0.0, 0.1, -0.1)])
    if not (np.isfinite(gumbel.loglik) and np.isfinite(gev.loglik)):
        raise EstimationError("deviance test needs finite Gumbel and GEV likelihoods")
    statistic = max(0.0, 2.0 * (gev.loglik - gumbel.loglik))
    pvalue = float(stats.chi2.sf(statistic, df=1))
    use_frechet = bool(pvalue < level and gev.xi > 0)
    logger.debug(f"deviance={statistic:.4g} p={pvalue:.4g} xi={gev.xi:.4g} use_frechet={use_frechet}")
    return DevianceResult(use_frechet, statistic, pvalue, gev.xi, gumbel, gev)
