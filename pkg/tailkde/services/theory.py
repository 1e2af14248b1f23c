"""
对数变换核估计渐近偏差与方差的数值验证

目标密度定义在 (0, ∞)^d 上(u0 = 0), 变换 y = log x, π(x) = x_1⋯x_d。
f_Y(y) = π(x) f_X(x) 的 Hessian 由链式法则给出:
D²f_Y = π(x)[f 11ᵀ + (x∘Df)1ᵀ + 1(x∘Df)ᵀ + Diag(x∘Df) + Diag(x) D²f Diag(x)]
偏差首项为 ½ m₂(K) π(x)⁻¹ tr(H D²f_Y), 方差首项为 n⁻¹ |H|^{-1/2} R(K) π(x)⁻¹ f(x)。
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy import stats
from scipy.optimize import brentq

from ..core.data import BandwidthMatrix, DataMatrix, TailRegion
from ..core.errors import ConfigError, DataError
from ..core.grid import make_grid
from ..core.logging import logger
from ..core.rng import RngStream
from ..models.enums import HISTOGRAM_TOKEN, KERNEL_TOKENS, KdeKind
from ..worker.tasks import failure_rate, run_replicates
from .bandwidth import select_bandwidth
from .histogram import hist_fit, ns_binwidth
from .kde import fit_kde
from .kernels import GaussianKernel, deriv4_vector, eval_scaled
from .transform import LogTransform


class AnalyticTarget(ABC):
    """闭式密度、梯度、Hessian 与精确抽样"""

    d: int = 1
    name: str = "target"

    @abstractmethod
    def density(self, points: np.ndarray) -> np.ndarray:
        """points 处的密度"""
        pass

    @abstractmethod
    def gradient(self, x: np.ndarray) -> np.ndarray:
        """x 处的梯度 Df"""
        pass

    @abstractmethod
    def hessian(self, x: np.ndarray) -> np.ndarray:
        """x 处的 Hessian D²f"""
        pass

    @abstractmethod
    def sample(self, n: int, rng: RngStream) -> DataMatrix:
        """精确抽取 n 个观测"""
        pass

    @abstractmethod
    def upper(self) -> np.ndarray:
        """ISE 积分区域的上界"""
        pass


@dataclass
class LognormalTarget(AnalyticTarget):
    """d 个独立 lognormal(mu, s) 边缘的乘积"""

    d: int = 1
    mu: float = 0.0
    s: float = 1.0
    name: str = "lognormal"

    def _margins(self, x: np.ndarray):
        x = np.asarray(x, dtype=float)
        z = (np.log(x) - self.mu) / self.s
        f = stats.norm.pdf(z) / (self.s * x)
        # g = (log f_j)', gp = g'
        g = -(1.0 + z / self.s) / x
        gp = (1.0 + z / self.s - 1.0 / self.s ** 2) / x ** 2
        return f, g, gp

    def density(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros(points.shape[0])
        inside = np.all(points > 0, axis=1)
        if np.any(inside):
            f, _, _ = self._margins(points[inside])
            out[inside] = np.prod(f, axis=1)
        return out

    def gradient(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        f, g, _ = self._margins(x)
        return np.prod(f) * g

    def hessian(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        f, g, gp = self._margins(x)
        return np.prod(f) * (np.outer(g, g) + np.diag(gp))

    def sample(self, n: int, rng: RngStream) -> DataMatrix:
        z = rng.generator().standard_normal(size=(n, self.d))
        return DataMatrix(np.exp(self.mu + self.s * z))

    def upper(self) -> np.ndarray:
        return np.full(self.d, float(np.exp(self.mu + 4.5 * self.s)))


@dataclass
class ExponentialTarget(AnalyticTarget):
    """标准指数分布, f(0⁺) = 1 > 0, 用于边界行为检查"""

    d: int = 1
    name: str = "exponential"

    def density(self, points) -> np.ndarray:
        x = np.atleast_2d(np.asarray(points, dtype=float))[:, 0]
        return np.where(x > 0, np.exp(-np.clip(x, 0.0, None)), 0.0)

    def gradient(self, x) -> np.ndarray:
        return -self.density(np.atleast_1d(x)[None, :])

    def hessian(self, x) -> np.ndarray:
        return self.density(np.atleast_1d(x)[None, :]).reshape(1, 1)

    def sample(self, n: int, rng: RngStream) -> DataMatrix:
        return DataMatrix(rng.generator().standard_exponential(size=(n, 1)))

    def upper(self) -> np.ndarray:
        return np.array([12.0])


def hessian_pullback(target: AnalyticTarget, x) -> np.ndarray:
    """D²f_Y(t(x)), 由 f_X、Df_X、D²f_X 按链式法则组装"""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x <= 0):
        raise DataError("theory checks need x in (0, inf)^d")
    f = float(target.density(x[None, :])[0])
    xg = x * target.gradient(x)
    ones = np.ones_like(x)
    inner = (f * np.outer(ones, ones) + np.outer(xg, ones) + np.outer(ones, xg) + np.diag(xg)
             + np.diag(x) @ target.hessian(x) @ np.diag(x))
    return float(np.prod(x)) * inner


def transformed_density(target: AnalyticTarget, y) -> float:
    """f_Y(y) = exp(Σy) f_X(exp(y))"""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    return float(np.exp(np.sum(y)) * target.density(np.exp(y)[None, :])[0])


def leading_bias_prediction(target: AnalyticTarget, x, H: BandwidthMatrix) -> float:
    """
    偏差首项 ½ m₂(K) π(x)⁻¹ tr(H D²f_Y(t(x)))

    d = 1 时等于 ½ m₂ h² [f + 3xf' + x²f'']。
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if H.d != x.size:
        raise DataError(f"bandwidth has dimension {H.d}, point has {x.size}")
    m2 = GaussianKernel(x.size).m2
    return 0.5 * m2 * float(np.trace(H.H @ hessian_pullback(target, x))) / float(np.prod(x))


def leading_bias_prediction_1d(target: AnalyticTarget, x: float, h2: float) -> float:
    """一元形式 ½ h² [f + 3xf' + x²f'']"""
    point = np.array([x], dtype=float)
    f = float(target.density(point[None, :])[0])
    f1 = float(target.gradient(point)[0])
    f2 = float(target.hessian(point)[0, 0])
    return 0.5 * h2 * (f + 3.0 * x * f1 + x * x * f2)


def leading_bias_prediction_2d(target: AnalyticTarget, x, H: BandwidthMatrix) -> float:
    """二元展开式, 与一般迹形式代数等价"""
    x1, x2 = np.asarray(x, dtype=float)
    point = np.array([x1, x2])
    f = float(target.density(point[None, :])[0])
    f1, f2 = target.gradient(point)
    hess = target.hessian(point)
    h11, h12, h22 = H.H[0, 0], H.H[0, 1], H.H[1, 1]
    return 0.5 * (h11 * (f + 3 * x1 * f1 + x1 ** 2 * hess[0, 0])
                  + 2 * h12 * (f + x1 * f1 + x2 * f2 + x1 * x2 * hess[0, 1])
                  + h22 * (f + 3 * x2 * f2 + x2 ** 2 * hess[1, 1]))


def leading_variance_prediction(target: AnalyticTarget, x, H: BandwidthMatrix, n: int) -> float:
    """方差首项 n⁻¹ |H|^{-1/2} R(K) π(x)⁻¹ f(x)"""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    f = float(target.density(x[None, :])[0])
    return GaussianKernel(x.size).roughness * f / (n * np.sqrt(H.det) * float(np.prod(x)))


@dataclass
class MonteCarloResult:
    """f̂_X(x; H) 在独立样本上的均值、方差及其标准误"""

    truth: float
    bias_hat: float
    var_hat: float
    bias_se: float
    var_se: float
    replicates: int
    failures: int = 0


def _point_estimate(rng: RngStream, target: AnalyticTarget, x: np.ndarray, H: BandwidthMatrix, n: int) -> float:
    data = target.sample(n, rng)
    model = fit_kde(data, H, KdeKind.TRANSFORMATION, LogTransform(np.zeros(target.d)))
    return float(model.density(x[None, :])[0])


def monte_carlo_bias_variance(target: AnalyticTarget, x, H: BandwidthMatrix, n: int, replicates: int,
                              seed: int, n_jobs: Optional[int] = None) -> MonteCarloResult:
    """
    固定带宽下变换核估计在 x 处的经验偏差与方差

    Raises:
        ConfigError: replicates < 2
    """
    if replicates < 2:
        raise ConfigError("Monte Carlo needs at least two replicates")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    outcomes = run_replicates(_point_estimate, replicates, seed, target, x, H, n, n_jobs=n_jobs)
    values = np.array([o.result for o in outcomes if o.success])
    truth = float(target.density(x[None, :])[0])
    var_hat = float(np.var(values, ddof=1))
    return MonteCarloResult(
        truth=truth,
        bias_hat=float(np.mean(values)) - truth,
        var_hat=var_hat,
        bias_se=float(np.sqrt(var_hat / values.size)),
        var_se=var_hat * float(np.sqrt(2.0 / (values.size - 1))),
        replicates=int(values.size),
        failures=len(outcomes) - int(values.size),
    )


@dataclass
class RateResult:
    """log 平均 ISE 对 log n 的最小二乘拟合"""

    slope: float
    intercept: float
    r2: float
    sample_sizes: List[int]
    mean_ise: List[float]


def _ise_grid(target: AnalyticTarget, points: int):
    lower = np.full(target.d, 1e-3)
    region = TailRegion(lower, np.zeros(target.d))
    return make_grid(region, target.upper(), points, spacing="log")


def integrated_squared_error(rng: RngStream, target: AnalyticTarget, n: int, token: str, points: int) -> float:
    """一个样本上估计量与解析目标的 ISE; token 为核估计标识或 hist"""
    data = target.sample(n, rng)
    grid = _ise_grid(target, points)
    if token == HISTOGRAM_TOKEN:
        estimate = hist_fit(data, ns_binwidth(data), origin=np.zeros(target.d))
    else:
        kind, selector = KERNEL_TOKENS[token]
        transform = LogTransform(np.zeros(target.d)) if kind == KdeKind.TRANSFORMATION else None
        fitted = transform.apply(data) if transform else data
        H = select_bandwidth(fitted, selector).H
        estimate = fit_kde(data, H, kind, transform)
    diff = estimate.density(grid.points()) - target.density(grid.points())
    return grid.integrate(diff * diff)


def mise_rate_check(target: AnalyticTarget, sample_sizes: Sequence[int], token: str, replicates: int,
                    seed: int, points: int = 2048, n_jobs: Optional[int] = None) -> RateResult:
    """
    MISE 收敛速度: 每个 n 上平均 ISE, 再对 log n 回归

    Raises:
        ConfigError: 样本量少于 4 个或某个样本量小于 500
    """
    if len(sample_sizes) < 4 or min(sample_sizes) < 500:
        raise ConfigError("rate check needs at least four sample sizes, each at least 500")
    if token != HISTOGRAM_TOKEN and token not in KERNEL_TOKENS:
        raise ConfigError(f"rate check does not support estimator '{token}'")
    means = []
    for k, n in enumerate(sample_sizes):
        # 每个样本量使用不相交的随机数流
        outcomes = run_replicates(integrated_squared_error, replicates, seed + k, target, n, token, points,
                                  n_jobs=n_jobs)
        if failure_rate(outcomes) > 0:
            logger.warning(f"n={n}: {sum(not o.success for o in outcomes)} 个重复失败")
        means.append(float(np.mean([o.result for o in outcomes if o.success])))
        logger.info(f"{token} n={n} mean ISE={means[-1]:.4g}")
    fit = stats.linregress(np.log(sample_sizes), np.log(means))
    return RateResult(slope=float(fit.slope), intercept=float(fit.intercept), r2=float(fit.rvalue ** 2),
                      sample_sizes=list(sample_sizes), mean_ise=means)


def normal_reference_optimum(n: int) -> float:
    """标准正态目标的 AMISE 最优 h² = (4/(3n))^{2/5}"""
    return (4.0 / (3.0 * n)) ** 0.4


def amise_minimizer_normal(n: int) -> float:
    """
    以解析 ψ₄ = 3/(8√π) 代入一元 AMISE(h²) = ¼ h⁴ ψ₄ + R(K)/(n h) 并求梯度零点
    """
    psi4 = 3.0 / (8.0 * np.sqrt(np.pi))
    roughness = GaussianKernel(1).roughness

    def gradient(h2):
        return 0.5 * h2 * psi4 - 0.5 * roughness / n * h2 ** -1.5

    return brentq(gradient, 1e-12, 1e3, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def mixed_partial(func: Callable[[np.ndarray], float], y: np.ndarray, axes: Sequence[int], step: float) -> float:
    """嵌套中心差分求任意阶混合偏导, 误差 O(step²)"""
    total = 0.0
    for signs in product((1.0, -1.0), repeat=len(axes)):
        point = np.array(y, dtype=float)
        for sign, axis in zip(signs, axes):
            point[axis] += sign * step
        total += np.prod(signs) * func(point)
    return total / (2.0 * step) ** len(axes)


def richardson_partial(func: Callable[[np.ndarray], float], y: np.ndarray, axes: Sequence[int],
                       step: float) -> float:
    """对 mixed_partial 做一次 Richardson 外推, 误差 O(step⁴)"""
    coarse = mixed_partial(func, y, axes, step)
    fine = mixed_partial(func, y, axes, step / 2.0)
    return (4.0 * fine - coarse) / 3.0


def finite_difference_hessian(target: AnalyticTarget, y, step: float = 1e-3) -> np.ndarray:
    y = np.atleast_1d(np.asarray(y, dtype=float))
    d = y.size
    out = np.empty((d, d))
    for i in range(d):
        for j in range(d):
            out[i, j] = richardson_partial(lambda p: transformed_density(target, p), y, (i, j), step)
    return out


def finite_difference_deriv4(G: BandwidthMatrix, y, step: float = 0.02) -> np.ndarray:
    """deriv4_vector 的有限差分对照, 按 Kronecker 顺序排列"""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    d = y.size
    kernel = GaussianKernel(d)
    out = np.empty(d ** 4)
    for flat, idx in enumerate(product(range(d), repeat=4)):
        out[flat] = richardson_partial(lambda p: eval_scaled(kernel, G, p), y, idx, step)
    return out


@dataclass
class NamedCheck:
    """命名检查结果"""

    name: str
    prediction: float
    estimate: float
    se: Optional[float]
    tolerance: float
    passed: bool
    details: Dict = field(default_factory=dict)


def _relative(a: np.ndarray, b: np.ndarray) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


def check_hessian_pullback(target: AnalyticTarget, rng: RngStream, trials: int = 5) -> NamedCheck:
    """链式法则组装的 D²f_Y 与 f_Y 有限差分 Hessian 比较"""
    gen = rng.generator()
    worst = 0.0
    for _ in range(trials):
        y = gen.uniform(-0.8, 0.8, size=target.d)
        coded = hessian_pullback(target, np.exp(y))
        numeric = finite_difference_hessian(target, y)
        scale = np.max(np.abs(coded))
        worst = max(worst, float(np.max(np.abs(coded - numeric)) / scale))
    return NamedCheck("hessian_pullback", 0.0, worst, None, 1e-5, worst < 1e-5, {"trials": trials})


def check_deriv4(rng: RngStream, d: int = 2, trials: int = 3) -> NamedCheck:
    """四阶导数向量与有限差分比较"""
    gen = rng.generator()
    worst = 0.0
    for _ in range(trials):
        A = gen.normal(size=(d, d))
        G = BandwidthMatrix(A @ A.T / d + np.eye(d))
        y = gen.normal(scale=0.7, size=d)
        exact = deriv4_vector(G, y)
        numeric = finite_difference_deriv4(G, y)
        scale = np.max(np.abs(exact))
        worst = max(worst, float(np.max(np.abs(exact - numeric)) / scale))
    return NamedCheck("deriv4_finite_difference", 0.0, worst, None, 1e-5, worst < 1e-5, {"d": d, "trials": trials})


def check_bias_forms(rng: RngStream, trials: int = 10) -> List[NamedCheck]:
    """一般迹形式与 d = 1 / d = 2 专门形式的一致性"""
    gen = rng.generator()
    checks = []
    one = LognormalTarget(d=1)
    two = LognormalTarget(d=2)
    worst1 = worst2 = 0.0
    for _ in range(trials):
        x = float(gen.uniform(0.2, 3.0))
        h2 = float(gen.uniform(0.01, 0.2))
        general = leading_bias_prediction(one, [x], BandwidthMatrix.from_scalar(np.sqrt(h2)))
        worst1 = max(worst1, _relative(general, leading_bias_prediction_1d(one, x, h2)))
        x2 = gen.uniform(0.2, 3.0, size=2)
        A = gen.normal(scale=0.2, size=(2, 2))
        H = BandwidthMatrix(A @ A.T + 0.01 * np.eye(2))
        worst2 = max(worst2, _relative(leading_bias_prediction(two, x2, H), leading_bias_prediction_2d(two, x2, H)))
    checks.append(NamedCheck("bias_form_d1", 0.0, worst1, None, 1e-12, worst1 < 1e-12))
    checks.append(NamedCheck("bias_form_d2", 0.0, worst2, None, 1e-12, worst2 < 1e-12))
    return checks


def check_boundary_variance(n: int = 4000, h: float = 0.15) -> NamedCheck:
    """f(0⁺) > 0 时方差首项随 x → 0 单调增大"""
    target = ExponentialTarget()
    H = BandwidthMatrix.from_scalar(h)
    eps = [0.1, 0.01, 0.001]
    values = [leading_variance_prediction(target, [e], H, n) for e in eps]
    passed = bool(np.all(np.diff(values) > 0))
    return NamedCheck("boundary_variance", values[-1], values[-1], None, 0.0, passed,
                      {"x": eps, "prediction": values})


def check_mise_formula(n: int = 1000) -> NamedCheck:
    """解析 ψ₄ 下 AMISE 最小点与正态参考最优带宽一致"""
    expected = normal_reference_optimum(n)
    found = amise_minimizer_normal(n)
    error = _relative(found, expected)
    return NamedCheck("mise_formula", expected, found, None, 1e-10, error < 1e-10, {"n": n})


def check_leading_terms(target: AnalyticTarget, x, h: float, n: int, replicates: int, seed: int,
                        n_jobs: Optional[int] = None) -> List[NamedCheck]:
    """
    偏差和方差的 Monte Carlo 对照, 以及 h 减半时偏差的 h² 缩放

    容差: 偏差 max(3·SE, 40%·|预测|), 方差 40% 相对误差, 缩放比在 [2.5, 6] 内。
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    H = BandwidthMatrix.from_scalar(h, target.d)
    bias = leading_bias_prediction(target, x, H)
    variance = leading_variance_prediction(target, x, H, n)
    mc = monte_carlo_bias_variance(target, x, H, n, replicates, seed, n_jobs=n_jobs)
    half = monte_carlo_bias_variance(target, x, H.scaled(0.25), n, replicates, seed + 1, n_jobs=n_jobs)

    bias_tol = max(3.0 * mc.bias_se, 0.4 * abs(bias))
    ratio = mc.bias_hat / half.bias_hat if half.bias_hat != 0 else float("inf")
    return [
        NamedCheck("leading_bias", bias, mc.bias_hat, mc.bias_se, bias_tol, abs(mc.bias_hat - bias) <= bias_tol,
                   {"h": h, "n": n, "replicates": mc.replicates, "failures": mc.failures}),
        NamedCheck("leading_variance", variance, mc.var_hat, mc.var_se, 0.4,
                   abs(mc.var_hat - variance) <= 0.4 * variance, {"h": h, "n": n}),
        NamedCheck("bias_h2_scaling", 4.0, ratio, None, 0.0, bool(2.5 <= ratio <= 6.0),
                   {"h": h, "half_bias": half.bias_hat}),
    ]


def check_rates(target: AnalyticTarget, sample_sizes: Sequence[int], replicates: int, seed: int,
                token: str = "kpi", n_jobs: Optional[int] = None) -> List[NamedCheck]:
    """核估计与直方图的 log-ISE 斜率"""
    kernel = mise_rate_check(target, sample_sizes, token, replicates, seed, n_jobs=n_jobs)
    hist = mise_rate_check(target, sample_sizes, HISTOGRAM_TOKEN, replicates, seed + 1000, n_jobs=n_jobs)
    kernel_ok = -1.0 <= kernel.slope <= -0.6 and kernel.r2 > 0.95
    hist_ok = -0.9 <= hist.slope <= -0.45 and hist.r2 > 0.95 and hist.slope > kernel.slope
    return [
        NamedCheck("rate_kernel", -0.8, kernel.slope, None, 0.2, bool(kernel_ok),
                   {"r2": kernel.r2, "n": kernel.sample_sizes, "mean_ise": kernel.mean_ise}),
        NamedCheck("rate_histogram", -2.0 / 3.0, hist.slope, None, 0.225, bool(hist_ok),
                   {"r2": hist.r2, "n": hist.sample_sizes, "mean_ise": hist.mean_ise}),
    ]


RATE_SAMPLE_SIZES = (500, 1000, 2000, 4000, 8000)


def run_theory_checks(seed: int, monte_carlo: bool = True, replicates: int = 500, rate_replicates: int = 100,
                      sample_sizes: Sequence[int] = RATE_SAMPLE_SIZES,
                      n_jobs: Optional[int] = None) -> List[NamedCheck]:
    """
    全部检查; monte_carlo=False 时只运行确定性的公式与导数检查

    Args:
        seed: 随机种子
        monte_carlo: 是否运行偏差/方差与收敛速度的 Monte Carlo 检查
        replicates: 偏差/方差检查的重复次数
        rate_replicates: 收敛速度检查中每个样本量的重复次数
        sample_sizes: 收敛速度检查的样本量
        n_jobs: 并行进程数

    Returns:
        List[NamedCheck]: 按固定顺序排列的检查结果
    """
    lognormal = LognormalTarget(d=1)
    checks = [
        check_hessian_pullback(lognormal, RngStream(seed, 1)),
        check_hessian_pullback(LognormalTarget(d=2), RngStream(seed, 2)),
        check_deriv4(RngStream(seed, 3)),
        *check_bias_forms(RngStream(seed, 4)),
        check_boundary_variance(),
        check_mise_formula(),
    ]
    checks[1].name = "hessian_pullback_d2"
    if monte_carlo:
        logger.info(f"Monte Carlo 偏差/方差检查: {replicates} 个重复")
        checks.extend(check_leading_terms(lognormal, [1.0], 0.15, 4000, replicates, seed, n_jobs=n_jobs))
        logger.info(f"收敛速度检查: n={list(sample_sizes)}")
        checks.extend(check_rates(lognormal, sample_sizes, rate_replicates, seed + 7, n_jobs=n_jobs))
    for check in checks:
        log = logger.info if check.passed else logger.warning
        log(f"{check.name}: 预测={check.prediction:.6g} 估计={check.estimate:.6g} 通过={check.passed}")
    return checks
