"""
二元最大稳定分布的 Pickands 依赖函数及其一、二阶导数

约定: V(y1, y2) = (y1 + y2) A(y2 / (y1 + y2)), y_j = -log F_j(x_j) 为标准指数尺度。
"""

from typing import Dict, Tuple

import numpy as np
from scipy.special import log_expit
from scipy.stats import norm

from ...core.errors import ConfigError
from ...models.enums import BivariateFamily

# 端点附近截断 w, 避免 log(0)
W_EPS = 1e-14
BISECTION_STEPS = 100
LOGIT_BOUND = 1000.0


def validate_params(family: BivariateFamily, params: Dict[str, float]) -> None:
    """检查依赖参数是否有效"""
    family = BivariateFamily(family)
    if family == BivariateFamily.BILOGISTIC:
        a, b = params.get("alpha"), params.get("beta")
        if a is None or b is None or not (0 < a < 1 and 0 < b < 1):
            raise ConfigError(f"bilogistic needs 0 < alpha, beta < 1, got {params}")
    elif family == BivariateFamily.ANL:
        r, t1, t2 = params.get("r"), params.get("theta1"), params.get("theta2")
        if r is None or t1 is None or t2 is None or r <= 0 or not (0 <= t1 <= 1 and 0 <= t2 <= 1):
            raise ConfigError(f"asymmetric negative logistic needs r > 0 and 0 <= theta <= 1, got {params}")
    elif family == BivariateFamily.HUSLER_REISS:
        lam = params.get("lam")
        if lam is None or lam <= 0:
            raise ConfigError(f"Husler-Reiss needs lam > 0, got {params}")


def bilogistic_root(w: np.ndarray, alpha: float, beta: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    求解 (1-α)(1-w)(1-γ)^β = (1-β) w γ^α 的根 γ ∈ (0,1)

    在 logit 尺度 γ = expit(s) 上做向量化二分, 返回 (log γ, log(1-γ)),
    使 γ 非常接近 0 或 1 时两者仍然精确。方程左减右关于 s 单调递减。
    """
    w = np.asarray(w, dtype=float)
    lo = np.full_like(w, -LOGIT_BOUND)
    hi = np.full_like(w, LOGIT_BOUND)
    log_left = np.log((1 - alpha) * (1 - w))
    log_right = np.log((1 - beta) * w)
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        value = log_left + beta * log_expit(-mid) - log_right - alpha * log_expit(mid)
        positive = value > 0
        lo = np.where(positive, mid, lo)
        hi = np.where(positive, hi, mid)
    s = 0.5 * (lo + hi)
    return log_expit(s), log_expit(-s)


def _bilogistic(w, alpha, beta):
    log_g, log_gc = bilogistic_root(w, alpha, beta)
    a_part = np.exp((1 - alpha) * log_g)
    b_part = np.exp((1 - beta) * log_gc)
    A = (1 - w) * a_part + w * b_part
    dA = b_part - a_part
    numer = (1 - alpha) * np.exp(beta * log_gc) + (1 - beta) * np.exp(alpha * log_g)
    denom = (beta * (1 - alpha) * (1 - w) * np.exp((beta - 1) * log_gc)
             + alpha * (1 - beta) * w * np.exp((alpha - 1) * log_g))
    dg = -numer / denom
    d2A = -dg * ((1 - beta) * np.exp(-beta * log_gc) + (1 - alpha) * np.exp(-alpha * log_g))
    return A, dA, d2A


def _anl(w, r, theta1, theta2):
    if theta1 == 0 or theta2 == 0:
        one = np.ones_like(w)
        return one, np.zeros_like(w), np.zeros_like(w)
    # a = (θ1(1-w))^{-r}, b = (θ2 w)^{-r}, S = a + b, 全部在对数尺度上计算
    log_a = -r * np.log(theta1 * (1 - w))
    log_b = -r * np.log(theta2 * w)
    log_s = np.logaddexp(log_a, log_b)
    A = 1 - np.exp(-log_s / r)
    dA = (np.exp(log_a - (1 / r + 1) * log_s) / (1 - w)
          - np.exp(log_b - (1 / r + 1) * log_s) / w)
    # S(a/(1-w)² + b/w²) - D² = ab / (w(1-w))²
    d2A = (r + 1) * np.exp(log_a + log_b - (1 / r + 2) * log_s) / (w * (1 - w)) ** 2
    return A, dA, d2A


def _husler_reiss(w, lam):
    logit = np.log(w / (1 - w))
    p = lam + logit / (2 * lam)
    q = lam - logit / (2 * lam)
    A = w * norm.cdf(p) + (1 - w) * norm.cdf(q)
    dA = norm.cdf(p) - norm.cdf(q)
    d2A = (norm.pdf(p) + norm.pdf(q)) / (2 * lam * w * (1 - w))
    return A, dA, d2A


def pickands_all(family: BivariateFamily, params: Dict[str, float], w) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    A(w), A'(w), A''(w)

    端点处 A 取精确值 1; 导数在截断后的内点上计算。
    """
    family = BivariateFamily(family)
    validate_params(family, params)
    w = np.asarray(w, dtype=float)
    inner = np.clip(w, W_EPS, 1 - W_EPS)
    if family == BivariateFamily.BILOGISTIC:
        A, dA, d2A = _bilogistic(inner, params["alpha"], params["beta"])
    elif family == BivariateFamily.ANL:
        A, dA, d2A = _anl(inner, params["r"], params["theta1"], params["theta2"])
    else:
        A, dA, d2A = _husler_reiss(inner, params["lam"])
    A = np.where((w <= 0) | (w >= 1), 1.0, A)
    return A, dA, d2A


def pickands(family: BivariateFamily, params: Dict[str, float], w) -> np.ndarray:
    """Pickands 依赖函数 A(w), w ∈ [0, 1]"""
    return pickands_all(family, params, w)[0]


def exponent_measure(family: BivariateFamily, params: Dict[str, float], y1, y2) -> np.ndarray:
    """V(y1, y2) = (y1 + y2) A(y2 / (y1 + y2))"""
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    s = y1 + y2
    return s * pickands(family, params, y2 / s)
