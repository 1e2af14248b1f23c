"""
带宽选择器: 正态尺度 (NS)、插入法 (PI)、无偏交叉验证 (UCV)、平滑交叉验证 (SCV)

所有选择器都作用在(变换后的)样本上, 交叉验证准则通过高斯卷积恒等式
∫K_A(· - a) K_B(· - b) = K_{A+B}(a - b) 闭式计算, 不做数值积分。
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..core.config import settings
from ..core.data import BandwidthMatrix, DataMatrix
from ..core.errors import DataError, EstimationError
from ..core.logging import logger
from ..models.enums import SelectorKind
from .kernels import GaussianKernel, deriv4_vector, gaussian_density, hermite4_combine, precision
from .optimizer import OptimizerTrace, optimize_pd


@dataclass
class SelectorResult:
    """带宽选择结果"""

    H: BandwidthMatrix
    selector: SelectorKind
    objective_value: float
    iterations: int = 0
    converged: bool = True
    pilot_G: Optional[BandwidthMatrix] = None
    fallback: Optional[str] = None
    trace: Optional[OptimizerTrace] = field(default=None, repr=False)


def _nonsingular_covariance(data: DataMatrix) -> np.ndarray:
    if data.n < data.d + 1:
        raise DataError(f"need at least d+1={data.d + 1} observations, got {data.n}")
    S = data.covariance()
    if np.min(np.linalg.eigvalsh(S)) <= 1e-14 * max(np.max(np.abs(S)), 1e-300):
        raise DataError("sample covariance matrix is singular")
    return S


def ns_constant(n: int, d: int) -> float:
    """正态尺度系数 [4 / ((d+2) n)]^{2/(d+4)}"""
    return (4.0 / ((d + 2.0) * n)) ** (2.0 / (d + 4.0))


def amise(H: BandwidthMatrix, psi4: np.ndarray, n: int) -> float:
    """
    渐近 MISE: ¼ m₂²(K) (vecᵀH ⊗ vecᵀH) ψ₄ + n⁻¹ R(K) |H|^{-1/2}
    """
    d = H.d
    kernel = GaussianKernel(d)
    vec = H.H.reshape(-1, order="F")
    squared_bias = 0.25 * kernel.m2 ** 2 * float(vec @ np.asarray(psi4).reshape(d * d, d * d) @ vec)
    det = H.det
    if det <= 0:
        return np.inf
    return squared_bias + kernel.roughness / (n * np.sqrt(det))


def ns_bandwidth(data: DataMatrix) -> SelectorResult:
    """
    正态尺度带宽 Ĥ_NS = [4/((d+2)n)]^{2/(d+4)} S

    Raises:
        DataError: 样本过少或协方差奇异
    """
    S = _nonsingular_covariance(data)
    H = BandwidthMatrix(ns_constant(data.n, data.d) * S)
    # 目标值记录为正态参考下的 AMISE
    psi_normal = deriv4_vector(BandwidthMatrix(2.0 * S), np.zeros(data.d))
    return SelectorResult(H=H, selector=SelectorKind.NS, objective_value=amise(H, psi_normal, data.n))


def pilot_bandwidth(data: DataMatrix) -> BandwidthMatrix:
    """一阶段正态参考试点带宽 G = [2/((d+4)n)]^{2/(d+6)} · 2S"""
    S = _nonsingular_covariance(data)
    d, n = data.d, data.n
    return BandwidthMatrix((2.0 / ((d + 4.0) * n)) ** (2.0 / (d + 6.0)) * 2.0 * S)


def _row_blocks(n: int, width: int):
    block = max(1, (1 << 22) // max(1, n * width))
    for start in range(0, n, block):
        yield start, min(n, start + block)


def psi4_estimate(data: DataMatrix, G: BandwidthMatrix) -> np.ndarray:
    """
    ψ̂₄(G) = n⁻² Σ_{i,j} D^{⊗4} L_G(Y_i - Y_j)

    按行分块累加 Σφ、Σφ x xᵀ、Σφ x⊗4 (x = G⁻¹Δ), 再由 Hermite 组合得到长度 d⁴ 的向量。
    """
    if G.d != data.d:
        raise DataError(f"pilot has dimension {G.d}, data has {data.d}")
    S = precision(G)
    Y = data.values
    n, d = data.n, data.d
    m0 = 0.0
    m2 = np.zeros((d, d))
    m4 = np.zeros((d * d, d * d))
    for start, stop in _row_blocks(n, d * d):
        diffs = (Y[start:stop, None, :] - Y[None, :, :]).reshape(-1, d)
        phi = gaussian_density(diffs, G)
        x = diffs @ S
        outer = np.einsum("pi,pj->pij", x, x).reshape(-1, d * d)
        weighted = phi[:, None] * outer
        m0 += phi.sum()
        m2 += weighted.sum(axis=0).reshape(d, d)
        m4 += weighted.T @ outer
    psi = hermite4_combine(np.asarray(m0), m2, m4.reshape(d, d, d, d), S)
    return psi / (n * n)


class PairSums:
    """
    上三角样本对 (i<j) 的差值乘积, 供 UCV/SCV 反复求值

    φ_A(Δ) 只依赖二次型 Δᵀ A⁻¹ Δ, 预先保存 Δ_a Δ_b (a ≤ b) 即可对任意 A 快速求和。
    """

    def __init__(self, data: DataMatrix):
        n, d = data.n, data.d
        rows, cols = np.triu_indices(n, k=1)
        diffs = data.values[rows] - data.values[cols]
        self.n = n
        self.d = d
        self.index = list(zip(*np.triu_indices(d)))
        self.products = np.stack([diffs[:, a] * diffs[:, b] for a, b in self.index])

    def gaussian_sum(self, A: BandwidthMatrix) -> float:
        """Σ_{i<j} φ_A(Y_i - Y_j)"""
        inv = precision(A)
        coef = np.array([inv[a, b] * (1.0 if a == b else 2.0) for a, b in self.index])
        quad = coef @ self.products
        log_norm = 0.5 * np.log(A.det) + 0.5 * self.d * np.log(2.0 * np.pi)
        return float(np.exp(-0.5 * quad - log_norm).sum())


def _roughness_term(H: BandwidthMatrix, n: int) -> float:
    det = H.det
    return GaussianKernel(H.d).roughness / (n * np.sqrt(det))


def ucv_objective(pairs: PairSums, H: BandwidthMatrix) -> float:
    """
    UCV(H) = n⁻² Σ_{i,j} φ_{2H}(Δ_ij) - 2[n(n-1)]⁻¹ Σ_{i≠j} φ_H(Δ_ij)
    """
    n = pairs.n
    off_2h = 2.0 * pairs.gaussian_sum(H.scaled(2.0))
    off_h = 2.0 * pairs.gaussian_sum(H)
    return _roughness_term(H, n) + off_2h / n ** 2 - 2.0 * off_h / (n * (n - 1))


def _origin_density(A: BandwidthMatrix) -> float:
    """φ_A(0) = (2π)^{-d/2} |A|^{-1/2}"""
    return float((2.0 * np.pi) ** (-0.5 * A.d) / np.sqrt(A.det))


def scv_constant(pairs: PairSums, G: BandwidthMatrix) -> float:
    """与 H 无关的项 n⁻² Σ_{i,j} φ_{2G}(Δ_ij), 含 i = j"""
    n = pairs.n
    two_g = G.scaled(2.0)
    return (2.0 * pairs.gaussian_sum(two_g) + n * _origin_density(two_g)) / n ** 2


def scv_objective(pairs: PairSums, H: BandwidthMatrix, G: BandwidthMatrix,
                  constant: Optional[float] = None) -> float:
    """
    SCV(H) = n⁻¹R(K)|H|^{-1/2} + n⁻² Σ_{i,j} [φ_{2H+2G} - 2φ_{H+2G} + φ_{2G}](Δ_ij)

    求和包括 i = j。G = 0 时按 UCV 计算(对角项退化为点质量)。
    """
    n = pairs.n
    if G.is_zero:
        return ucv_objective(pairs, H)
    two_g = G.H * 2.0
    wide = BandwidthMatrix(2.0 * H.H + two_g)
    narrow = BandwidthMatrix(H.H + two_g)
    total = (2.0 * pairs.gaussian_sum(wide) + n * _origin_density(wide)
             - 2.0 * (2.0 * pairs.gaussian_sum(narrow) + n * _origin_density(narrow)))
    if constant is None:
        constant = scv_constant(pairs, G)
    return _roughness_term(H, n) + total / n ** 2 + constant


def scv_pair_summand(H: BandwidthMatrix, G: BandwidthMatrix, delta) -> float:
    """单个样本对的 SCV 被加项 φ_{2H+2G}(δ) - 2φ_{H+2G}(δ) + φ_{2G}(δ)"""
    delta = np.atleast_2d(np.asarray(delta, dtype=float))
    two_g = 2.0 * G.H
    value = (gaussian_density(delta, BandwidthMatrix(2.0 * H.H + two_g))[0]
             - 2.0 * gaussian_density(delta, BandwidthMatrix(H.H + two_g))[0])
    if not G.is_zero:
        value += gaussian_density(delta, BandwidthMatrix(two_g))[0]
    return float(value)


def pi_objective(H: BandwidthMatrix, psi4: np.ndarray, n: int) -> float:
    """PI(H) = ¼ m₂²(K) (vecᵀH ⊗ vecᵀH) ψ̂₄(G) + n⁻¹ R(K) |H|^{-1/2}"""
    return amise(H, psi4, n)


def _guard(data: DataMatrix, selector: SelectorKind) -> Optional[SelectorResult]:
    if data.n < settings.MIN_CV_SAMPLE:
        logger.warning(f"样本量 n={data.n} < {settings.MIN_CV_SAMPLE}, {selector.value} 退回正态尺度带宽")
        result = ns_bandwidth(data)
        result.fallback = f"n<{settings.MIN_CV_SAMPLE}"
        return result
    return None


def _warn_ties(data: DataMatrix) -> None:
    ties = data.tie_fraction()
    if ties > settings.TIE_WARNING_FRACTION:
        logger.warning(f"样本中 {ties:.1%} 的观测完全重合, 交叉验证准则假定数据无重复")


def _finish(selector: SelectorKind, H: BandwidthMatrix, trace: OptimizerTrace,
            pilot: Optional[BandwidthMatrix] = None) -> SelectorResult:
    if not np.isfinite(trace.final_value):
        raise EstimationError(f"{selector.value} objective is not finite at the optimum")
    logger.info(f"{selector.value} 带宽: H={np.round(H.H, 6).tolist()} 迭代={trace.iterations} 收敛={trace.converged}")
    return SelectorResult(H=H, selector=selector, objective_value=trace.final_value,
                          iterations=trace.iterations, converged=trace.converged, pilot_G=pilot, trace=trace)


def pi_select(data: DataMatrix, diag: bool = False) -> SelectorResult:
    """
    插入法: 以 Ĥ_NS 为起点最小化 PI(H), ψ₄ 由正态参考试点 G 估计
    """
    fallback = _guard(data, SelectorKind.PI)
    if fallback:
        return fallback
    start = ns_bandwidth(data).H
    G = pilot_bandwidth(data)
    psi4 = psi4_estimate(data, G)
    H, trace = optimize_pd(lambda M: pi_objective(M, psi4, data.n), start, diag=diag)
    return _finish(SelectorKind.PI, H, trace, G)


def ucv_select(data: DataMatrix, diag: bool = False) -> SelectorResult:
    """无偏交叉验证"""
    fallback = _guard(data, SelectorKind.UCV)
    if fallback:
        return fallback
    _warn_ties(data)
    pairs = PairSums(data)
    H, trace = optimize_pd(lambda M: ucv_objective(pairs, M), ns_bandwidth(data).H, diag=diag)
    return _finish(SelectorKind.UCV, H, trace)


def scv_select(data: DataMatrix, diag: bool = False, G: Optional[BandwidthMatrix] = None) -> SelectorResult:
    """
    平滑交叉验证

    Args:
        data: 变换后的样本
        diag: 是否只搜索对角矩阵
        G: 试点带宽，为None时使用正态参考试点；传入零矩阵时等价于 UCV
    """
    fallback = _guard(data, SelectorKind.SCV)
    if fallback:
        return fallback
    _warn_ties(data)
    pairs = PairSums(data)
    G = pilot_bandwidth(data) if G is None else G
    constant = 0.0 if G.is_zero else scv_constant(pairs, G)
    H, trace = optimize_pd(lambda M: scv_objective(pairs, M, G, constant), ns_bandwidth(data).H, diag=diag)
    return _finish(SelectorKind.SCV, H, trace, G)


_SELECTORS = {
    SelectorKind.PI: pi_select,
    SelectorKind.UCV: ucv_select,
    SelectorKind.SCV: scv_select,
}


def select_bandwidth(data: DataMatrix, selector: SelectorKind, diag: bool = False) -> SelectorResult:
    """按选择器类型分派"""
    if selector == SelectorKind.NS:
        return ns_bandwidth(data)
    return _SELECTORS[selector](data, diag=diag)
