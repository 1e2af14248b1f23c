"""
GEV 边缘的二元最大稳定分布: 双 logistic、非对称负 logistic、Hüsler-Reiss

F(x1, x2) = exp(-V(y1, y2)), y_j = -log F_j(x_j),
f = exp(-V) [V_1 V_2 - V_12] |dy1/dx1| |dy2/dx2|,
其中 V_1 = A - tA', V_2 = A + (1-t)A', V_12 = -t(1-t)A''/s, s = y1 + y2, t = y2 / s。
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit

from ...core.config import settings
from ...core.data import DataMatrix
from ...core.errors import ConfigError, DataError, EstimationError
from ...core.logging import logger
from ...models.enums import BivariateFamily
from .pickands import pickands, pickands_all, validate_params
from .univariate import ParametricTail, fit_gev

# 单位 Fréchet 边缘 = GEV(1, 1, 1)
UNIT_FRECHET = (1.0, 1.0, 1.0)


def gev_to_exponential(x: np.ndarray, mu: float, sigma: float, xi: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    y = -log F(x) 及 log|dy/dx|; 支撑外 y 为 nan

    Returns:
        Tuple[np.ndarray, np.ndarray]: (y, log|dy/dx|)
    """
    x = np.asarray(x, dtype=float)
    z = (x - mu) / sigma
    with np.errstate(all="ignore"):
        if abs(xi) < 1e-12:
            y = np.exp(-z)
        else:
            base = 1.0 + xi * z
            y = np.where(base > 0, np.abs(base) ** (-1.0 / xi), np.nan)
        log_jac = (1.0 + xi) * np.log(y) - np.log(sigma)
    return y, log_jac


def exponential_to_gev(y: np.ndarray, mu: float, sigma: float, xi: float) -> np.ndarray:
    """gev_to_exponential 的逆映射"""
    y = np.asarray(y, dtype=float)
    if abs(xi) < 1e-12:
        return mu - sigma * np.log(y)
    return mu + sigma * (y ** (-xi) - 1.0) / xi


@dataclass
class BivariateEvdFit:
    """二元极值分布(拟合结果或模拟目标)"""

    family: BivariateFamily
    params: Dict[str, float]
    margins: List[Tuple[float, float, float]] = field(default_factory=lambda: [UNIT_FRECHET, UNIT_FRECHET])
    loglik: float = float("nan")
    converged: bool = True
    iterations: int = 0
    n: int = 0
    d: int = field(default=2, repr=False)

    def __post_init__(self):
        self.family = BivariateFamily(self.family)
        self.params = {k: float(v) for k, v in self.params.items()}
        validate_params(self.family, self.params)
        self.margins = [tuple(float(v) for v in m) for m in self.margins]
        for mu, sigma, xi in self.margins:
            if sigma <= 0:
                raise ConfigError("margin scale must be positive")

    def _exponential(self, points: np.ndarray):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        y1, j1 = gev_to_exponential(points[:, 0], *self.margins[0])
        y2, j2 = gev_to_exponential(points[:, 1], *self.margins[1])
        return y1, y2, j1 + j2

    def log_density(self, points) -> np.ndarray:
        y1, y2, log_jac = self._exponential(points)
        out = np.full(y1.shape, -np.inf)
        ok = np.isfinite(y1) & np.isfinite(y2) & (y1 > 0) & (y2 > 0)
        if np.any(ok):
            a, b = y1[ok], y2[ok]
            s = a + b
            t = b / s
            A, dA, d2A = pickands_all(self.family, self.params, t)
            term = (A - t * dA) * (A + (1 - t) * dA) + t * (1 - t) * d2A / s
            with np.errstate(all="ignore"):
                out[ok] = -s * A + np.log(np.maximum(term, 0.0)) + log_jac[ok]
        return out

    def density(self, points) -> np.ndarray:
        return np.exp(self.log_density(points))

    def cdf(self, points) -> np.ndarray:
        """联合分布函数 exp(-V); 支撑下方为 0, 上方为 1"""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        ys = []
        for j in range(2):
            mu, sigma, xi = self.margins[j]
            y, _ = gev_to_exponential(points[:, j], mu, sigma, xi)
            below = (xi > 0) & ~np.isfinite(y)
            y = np.where(below, np.inf, np.where(np.isfinite(y), y, 0.0))
            ys.append(y)
        y1, y2 = ys
        s = y1 + y2
        out = np.zeros(s.shape)
        finite = np.isfinite(s) & (s > 0)
        out[finite] = np.exp(-s[finite] * pickands(self.family, self.params, y2[finite] / s[finite]))
        out[s == 0] = 1.0
        return out

    def margin_cdf(self, j: int, x) -> np.ndarray:
        y, _ = gev_to_exponential(np.asarray(x, dtype=float), *self.margins[j])
        return np.exp(-y)

    def survival(self, u) -> float:
        """P(X1 > u1, X2 > u2) = 1 - F1(u1) - F2(u2) + F(u1, u2)"""
        u = np.asarray(u, dtype=float).reshape(2)
        value = 1.0 - self.margin_cdf(0, u[0]) - self.margin_cdf(1, u[1]) + self.cdf(u[None, :])[0]
        return float(value)

    def loglikelihood(self, points) -> float:
        return float(np.sum(self.log_density(points)))

    def tail(self, u) -> ParametricTail:
        return ParametricTail(self, np.asarray(u, dtype=float).reshape(2))


# 依赖参数的无约束变换
def _pack_dependence(family: BivariateFamily, params: Dict[str, float]) -> np.ndarray:
    if family == BivariateFamily.BILOGISTIC:
        return logit([params["alpha"], params["beta"]])
    if family == BivariateFamily.ANL:
        return np.array([np.log(params["r"]), *logit([params["theta1"], params["theta2"]])])
    return np.array([np.log(params["lam"])])


def _unpack_dependence(family: BivariateFamily, theta: np.ndarray) -> Dict[str, float]:
    if family == BivariateFamily.BILOGISTIC:
        return {"alpha": float(expit(theta[0])), "beta": float(expit(theta[1]))}
    if family == BivariateFamily.ANL:
        return {"r": float(np.exp(theta[0])), "theta1": float(expit(theta[1])), "theta2": float(expit(theta[2]))}
    return {"lam": float(np.exp(theta[0]))}


DEPENDENCE_STARTS = {
    BivariateFamily.BILOGISTIC: [{"alpha": 0.5, "beta": 0.5}, {"alpha": 0.3, "beta": 0.7}, {"alpha": 0.7, "beta": 0.3}],
    BivariateFamily.ANL: [{"r": 1.0, "theta1": 0.5, "theta2": 0.5}, {"r": 2.0, "theta1": 0.8, "theta2": 0.8},
                          {"r": 0.5, "theta1": 0.3, "theta2": 0.9}],
    BivariateFamily.HUSLER_REISS: [{"lam": 1.0}, {"lam": 0.5}, {"lam": 2.0}],
}


def _unpack(family: BivariateFamily, theta: np.ndarray) -> Tuple[Dict[str, float], List[Tuple[float, float, float]]]:
    margins = [(theta[0], float(np.exp(theta[1])), theta[2]), (theta[3], float(np.exp(theta[4])), theta[5])]
    return _unpack_dependence(family, theta[6:]), margins


def fit_bivariate(data: DataMatrix, family: BivariateFamily, starts: Optional[int] = None) -> BivariateEvdFit:
    """
    边缘与依赖参数的联合极大似然

    边缘起点取各列单独的 GEV 拟合; 依赖参数使用多个起点, 保留似然最大的解。

    Args:
        data: 二元样本, n >= 50
        family: 分布族
        starts: 起点个数，为None时使用 BIVARIATE_STARTS

    Returns:
        BivariateEvdFit: 拟合结果

    Raises:
        DataError: 样本不足或维数不为 2
        EstimationError: 所有起点的似然都不是有限值
    """
    family = BivariateFamily(family)
    if data.d != 2:
        raise DataError("bivariate families need d = 2")
    if data.n < 50:
        raise DataError(f"bivariate fit needs at least 50 observations, got {data.n}")
    points = data.values
    margin_theta = []
    for j in range(2):
        gev = fit_gev(points[:, j])
        margin_theta.extend([gev.mu, np.log(gev.sigma), gev.xi])

    def nll(theta):
        try:
            params, margins = _unpack(family, theta)
            model = BivariateEvdFit(family, params, margins)
        except (ConfigError, ValueError):
            return np.inf
        with np.errstate(all="ignore"):
            value = -model.loglikelihood(points)
        return value if np.isfinite(value) else np.inf

    count = starts or settings.BIVARIATE_STARTS
    n_params = 6 + len(_pack_dependence(family, DEPENDENCE_STARTS[family][0]))
    best = None
    for dep in DEPENDENCE_STARTS[family][:count]:
        theta0 = np.concatenate([margin_theta, _pack_dependence(family, dep)])
        if not np.isfinite(nll(theta0)):
            continue
        result = minimize(nll, theta0, method="Nelder-Mead",
                          options={"maxiter": settings.OPTIMIZER_ITER_PER_PARAM * n_params,
                                   "maxfev": settings.OPTIMIZER_ITER_PER_PARAM * n_params * 2,
                                   "xatol": 1e-7, "fatol": 1e-9, "adaptive": True})
        if best is None or result.fun < best.fun:
            best = result
    if best is None:
        raise EstimationError(f"no starting value gives a finite {family.value} likelihood")

    params, margins = _unpack(family, best.x)
    fit = BivariateEvdFit(family, params, margins, loglik=-best.fun, converged=bool(best.success),
                          iterations=best.nit, n=data.n)
    if not fit.converged:
        logger.warning(f"{family.value} 联合极大似然未收敛: {best.message}")
    logger.debug(f"{family.value} fit: params={params} loglik={fit.loglik:.6g}")
    return fit


def bivariate_density(fit: BivariateEvdFit, x) -> float:
    """
    单点联合密度

    Raises:
        DataError: x 不在边缘支撑内
    """
    value = fit.log_density(np.asarray(x, dtype=float).reshape(1, 2))[0]
    if not np.isfinite(value):
        y1, y2, _ = fit._exponential(np.asarray(x, dtype=float).reshape(1, 2))
        if not (np.isfinite(y1[0]) and np.isfinite(y2[0])):
            raise DataError("point lies outside the margin supports")
    return float(np.exp(value))


def dependence_from_convention(family: BivariateFamily, dependence: float,
                               convention: Optional[str] = None) -> Dict[str, float]:
    """
    按约定把"依赖参数"换算为 Pickands 函数参数

    evd 约定: Hüsler-Reiss 的 λ = 1/dep, 非对称负 logistic 的 r = dep;
    literal 约定: 两者都直接取 dep。
    """
    convention = convention or settings.DEPENDENCE_CONVENTION
    family = BivariateFamily(family)
    if family == BivariateFamily.HUSLER_REISS:
        return {"lam": 1.0 / dependence if convention == "evd" else dependence}
    if family == BivariateFamily.ANL:
        return {"r": dependence}
    raise ConfigError(f"{family.value} has no single dependence parameter")
