"""
高斯核: 缩放核 K_H、高斯卷积、四阶导数向量

四阶导数使用多元 Hermite 多项式闭式表达:
    D_{ijkl} φ_G(y) = φ_G(y) [x_i x_j x_k x_l - Σ₆ x_a x_b S_cd + Σ₃ S_ab S_cd],  S = G⁻¹, x = S y
结果按四重 Kronecker 顺序展平, 下标 ((i·d + j)·d + k)·d + l。
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from ..core.data import BandwidthMatrix
from ..core.errors import DataError, EstimationError


@dataclass(frozen=True)
class GaussianKernel:
    """标准 d 维高斯核, 二阶矩矩阵为单位阵"""

    d: int = 1

    @property
    def m2(self) -> float:
        return 1.0

    @property
    def roughness(self) -> float:
        """R(K) = ∫K² = (4π)^{-d/2}"""
        return (4.0 * np.pi) ** (-self.d / 2.0)


def gaussian_density(diffs: np.ndarray, H: BandwidthMatrix) -> np.ndarray:
    """
    N(0, H) 密度在多个点上的值

    Args:
        diffs: 形状 (m, d) 的点
        H: 协方差矩阵

    Returns:
        np.ndarray: 长度 m 的密度值
    """
    diffs = np.atleast_2d(np.asarray(diffs, dtype=float))
    return np.exp(gaussian_log_density(diffs, H))


def gaussian_log_density(diffs: np.ndarray, H: BandwidthMatrix) -> np.ndarray:
    d = H.d
    if diffs.shape[-1] != d:
        raise DataError(f"points have dimension {diffs.shape[-1]}, bandwidth has {d}")
    chol = H.cholesky()
    z = solve_triangular(chol, diffs.T, lower=True)
    log_norm = np.sum(np.log(np.diag(chol))) + 0.5 * d * np.log(2.0 * np.pi)
    return -0.5 * np.sum(z * z, axis=0) - log_norm


def eval_scaled(kernel: GaussianKernel, H: BandwidthMatrix, y) -> float:
    """K_H(y) = |H|^{-1/2} K(H^{-1/2} y), 即 N(0,H) 在 y 处的密度"""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if H.d != kernel.d:
        raise DataError(f"kernel has dimension {kernel.d}, bandwidth has {H.d}")
    return float(gaussian_density(y[None, :], H)[0])


def convolve(H1: BandwidthMatrix, H2: BandwidthMatrix) -> BandwidthMatrix:
    """两个中心化高斯卷积的协方差: H1 + H2"""
    if H1.d != H2.d:
        raise DataError(f"cannot convolve bandwidths of dimension {H1.d} and {H2.d}")
    return BandwidthMatrix(H1.H + H2.H)


def precision(G: BandwidthMatrix) -> np.ndarray:
    """G⁻¹, 经 Cholesky 分解计算"""
    chol = G.cholesky()
    inv_chol = solve_triangular(chol, np.eye(G.d), lower=True)
    return inv_chol.T @ inv_chol


def hermite4_combine(m0, m2, m4, S: np.ndarray) -> np.ndarray:
    """
    由加权矩 Σφ、Σφ x xᵀ、Σφ x⊗4 组装四阶导数张量

    Args:
        m0: 形状 (...) 的零阶矩
        m2: 形状 (..., d, d) 的二阶矩
        m4: 形状 (..., d, d, d, d) 的四阶矩
        S: 精度矩阵 G⁻¹

    Returns:
        np.ndarray: 形状 (..., d⁴) 的 Kronecker 顺序向量
    """
    m0 = np.asarray(m0, dtype=float)
    d = S.shape[0]
    six = (
        np.einsum("...ij,kl->...ijkl", m2, S)
        + np.einsum("...ik,jl->...ijkl", m2, S)
        + np.einsum("...il,jk->...ijkl", m2, S)
        + np.einsum("...jk,il->...ijkl", m2, S)
        + np.einsum("...jl,ik->...ijkl", m2, S)
        + np.einsum("...kl,ij->...ijkl", m2, S)
    )
    three = (
        np.einsum("ij,kl->ijkl", S, S)
        + np.einsum("ik,jl->ijkl", S, S)
        + np.einsum("il,jk->ijkl", S, S)
    )
    tensor = m4 - six + m0[..., None, None, None, None] * three
    return tensor.reshape(m0.shape + (d ** 4,))


def deriv4_batch(G: BandwidthMatrix, points: np.ndarray) -> np.ndarray:
    """deriv4_vector 的批量版本, 返回形状 (m, d⁴)"""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if G.d > 3:
        raise DataError("fourth derivatives are only supported for d <= 3")
    S = precision(G)
    phi = gaussian_density(points, G)
    x = points @ S
    m2 = phi[:, None, None] * np.einsum("mi,mj->mij", x, x)
    m4 = np.einsum("mij,mk,ml->mijkl", m2, x, x)
    return hermite4_combine(phi, m2, m4, S)


def deriv4_vector(G: BandwidthMatrix, y) -> np.ndarray:
    """
    N(0,G) 密度在 y 处的全部四阶偏导数

    Args:
        G: 正定协方差矩阵
        y: d 维点

    Returns:
        np.ndarray: 长度 d⁴ 的向量, 四重 Kronecker 顺序

    Raises:
        EstimationError: G 奇异
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if G.is_zero:
        raise EstimationError("fourth derivative of a Dirac kernel is undefined")
    return deriv4_batch(G, y[None, :])[0]
