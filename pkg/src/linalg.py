"""
線性代數模組
提供共變異數、對稱矩陣特徵分解（Jacobi）、Cholesky 分解、
Mahalanobis 距離與 PCA 座標轉換。所有函式皆為純函式。
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np

from src.errors import (
    ContractViolationError,
    ConvergenceError,
    DataError,
    DegenerateInputError,
    NotPositiveDefiniteError,
    ShapeMismatchError,
    SingularCovarianceError,
)

SYMMETRY_TOL = 1e-9
JACOBI_REL_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
CHOLESKY_PIVOT_MIN = 1e-12
EPS_RANK_FACTOR = 1e-10


def as_matrix(data, name: str = "matrix") -> np.ndarray:
    """轉成 2 維 float 陣列並檢查所有元素為有限值"""
    arr = np.array(data, dtype=float)
    if arr.ndim != 2:
        raise ShapeMismatchError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains NaN or Inf")
    return arr


@dataclass(frozen=True)
class SymmetricEigen:
    """特徵值（由大到小）與對應的單位正交特徵向量（第 k 欄為 η_k）"""

    values: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        self.values.setflags(write=False)
        self.vectors.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    @property
    def trace(self) -> float:
        return float(np.sum(self.values))


def covariance(data, mean: Optional[np.ndarray] = None) -> np.ndarray:
    """母體共變異數（除以 n）"""
    x = as_matrix(data, "data")
    n = x.shape[0]
    if n < 2:
        raise DegenerateInputError(f"covariance needs at least 2 rows, got {n}")
    center = x.mean(axis=0) if mean is None else np.asarray(mean, dtype=float)
    dev = x - center
    cov = dev.T @ dev / n
    return (cov + cov.T) / 2.0


def _round_robin_rounds(m: int) -> List[Tuple[np.ndarray, np.ndarray]]:
    """
    循環賽排程：每一輪的 (p, q) 配對互不重疊，可一次套用整輪旋轉。
    m 為奇數時補一個虛擬索引，含虛擬索引的配對略過。
    """
    players = list(range(m)) + ([-1] if m % 2 else [])
    size = len(players)
    rounds = []
    for _ in range(size - 1):
        ps, qs = [], []
        for i in range(size // 2):
            a, b = players[i], players[size - 1 - i]
            if a < 0 or b < 0:
                continue
            ps.append(min(a, b))
            qs.append(max(a, b))
        if ps:
            rounds.append((np.array(ps), np.array(qs)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def _off_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def sym_eigen(a) -> SymmetricEigen:
    """
    循環 Jacobi 旋轉求對稱矩陣的特徵分解。

    收斂條件：非對角 Frobenius norm < 1e-12 * ||a||_F，最多 100 次 sweep。
    結果依特徵值由大到小排序（同值依原索引），每個特徵向量最大絕對值分量為正。
    """
    mat = as_matrix(a, "a")
    m, cols = mat.shape
    if m != cols or m < 1:
        raise ShapeMismatchError(f"sym_eigen needs a non-empty square matrix, got {mat.shape}")
    asym = float(np.max(np.abs(mat - mat.T)))
    if asym > SYMMETRY_TOL:
        raise ContractViolationError(f"matrix is not symmetric (max |a - a^T| = {asym:.3e})")

    work = (mat + mat.T) / 2.0
    vecs = np.eye(m)
    tol = JACOBI_REL_TOL * float(np.linalg.norm(mat))
    rounds = _round_robin_rounds(m)

    off = _off_norm(work)
    sweeps = 0
    while off > tol:
        if sweeps >= JACOBI_MAX_SWEEPS:
            raise ConvergenceError("Jacobi did not converge in 100 sweeps", off)
        for p, q in rounds:
            apq = work[p, q]
            app = work[p, p]
            aqq = work[q, q]
            active = apq != 0.0
            safe_apq = np.where(active, apq, 1.0)
            theta = (aqq - app) / (2.0 * safe_apq)
            sign = np.where(theta >= 0.0, 1.0, -1.0)
            t = np.where(active, sign / (np.abs(theta) + np.hypot(theta, 1.0)), 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c

            col_p = work[:, p].copy()
            col_q = work[:, q].copy()
            work[:, p] = col_p * c - col_q * s
            work[:, q] = col_p * s + col_q * c
            row_p = work[p, :].copy()
            row_q = work[q, :].copy()
            work[p, :] = c[:, None] * row_p - s[:, None] * row_q
            work[q, :] = s[:, None] * row_p + c[:, None] * row_q
            work[p, q] = 0.0
            work[q, p] = 0.0

            vec_p = vecs[:, p].copy()
            vec_q = vecs[:, q].copy()
            vecs[:, p] = vec_p * c - vec_q * s
            vecs[:, q] = vec_p * s + vec_q * c
        sweeps += 1
        off = _off_norm(work)

    values = np.diag(work).copy()
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vecs = vecs[:, order]
    for k in range(m):
        idx = int(np.argmax(np.abs(vecs[:, k])))
        if vecs[idx, k] < 0:
            vecs[:, k] = -vecs[:, k]
    return SymmetricEigen(values=values, vectors=vecs)


def cholesky(a) -> np.ndarray:
    """回傳下三角 L，使 a = L L^T"""
    mat = as_matrix(a, "a")
    m, cols = mat.shape
    if m != cols:
        raise ShapeMismatchError(f"cholesky needs a square matrix, got {mat.shape}")
    lower = np.zeros_like(mat)
    for j in range(m):
        pivot = mat[j, j] - lower[j, :j] @ lower[j, :j]
        if pivot <= CHOLESKY_PIVOT_MIN:
            raise NotPositiveDefiniteError(
                f"matrix is not positive definite (pivot {j} = {pivot:.3e})"
            )
        lower[j, j] = np.sqrt(pivot)
        if j + 1 < m:
            lower[j + 1 :, j] = (mat[j + 1 :, j] - lower[j + 1 :, :j] @ lower[j, :j]) / lower[j, j]
    return lower


def check_rank(eig: SymmetricEigen, count: Optional[int] = None) -> None:
    """前 count 個特徵值必須大於 1e-10 * trace，否則視為奇異"""
    values = eig.values if count is None else eig.values[:count]
    threshold = EPS_RANK_FACTOR * eig.trace
    for idx, value in enumerate(values):
        if value <= threshold:
            raise SingularCovarianceError(idx, float(value), threshold)


def mahalanobis_sq(x, mean, eig: SymmetricEigen) -> Union[float, np.ndarray]:
    """
    在特徵座標下計算 Mahalanobis 距離平方：Σ (η_i^T (x - mean))^2 / λ_i。
    x 為單一向量時回傳純量，為矩陣時逐列回傳。
    """
    check_rank(eig)
    arr = np.asarray(x, dtype=float)
    center = np.asarray(mean, dtype=float)
    m = eig.dim
    if arr.shape[-1] != m or center.shape != (m,):
        raise ShapeMismatchError(
            f"dimension mismatch: x {arr.shape}, mean {center.shape}, covariance {m}x{m}"
        )
    coords = (arr - center) @ eig.vectors
    dist = np.sum(coords**2 / eig.values, axis=-1)
    if arr.ndim == 1:
        return float(dist)
    return dist


def pca_transform(data, eig: SymmetricEigen) -> np.ndarray:
    """Y = P^T X（逐列），P 的第 k 欄為 η_k"""
    x = as_matrix(data, "data")
    if x.shape[1] != eig.dim:
        raise ShapeMismatchError(f"data has {x.shape[1]} columns, eigenbasis has {eig.dim}")
    return x @ eig.vectors


def pca_inverse(coords, eig: SymmetricEigen) -> np.ndarray:
    y = as_matrix(coords, "coords")
    if y.shape[1] != eig.dim:
        raise ShapeMismatchError(f"coords have {y.shape[1]} columns, eigenbasis has {eig.dim}")
    return y @ eig.vectors.T


def eigen_spectrum(data) -> Tuple[np.ndarray, np.ndarray]:
    """診斷用：共變異數特徵值（由大到小）及各自的解釋變異比例"""
    eig = sym_eigen(covariance(data))
    total = eig.trace
    ratios = eig.values / total if total > 0 else np.zeros_like(eig.values)
    return eig.values.copy(), ratios
