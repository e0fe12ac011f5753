"""
損失函數
L_MSE、特徵值懲罰 L_EIG 與兩者加權的 L_MSE-eig，
以及 β 選擇規則與前 l 個特徵值的挑選。
"""

import math
from dataclasses import asdict, dataclass
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from src.errors import BatchTooSmallError, ConfigError, ShapeMismatchError
from src.linalg import SymmetricEigen, covariance, sym_eigen

DEFAULT_THETA1 = 0.008
DEFAULT_THETA2 = 1.0
# 輸出特徵值接近 0 時，1/(2√λ̂) 以此下限計算
EIG_GRAD_FLOOR = 1e-12


@dataclass(frozen=True)
class LossConfig:
    beta: float
    intrinsic_dim: int
    theta1: float = DEFAULT_THETA1
    theta2: float = DEFAULT_THETA2

    def __post_init__(self):
        if not (self.theta1 > 0 and self.theta2 > 0 and self.beta > 0):
            raise ConfigError(
                f"theta1, theta2 and beta must be positive "
                f"(got theta1={self.theta1}, theta2={self.theta2}, beta={self.beta})"
            )
        if self.intrinsic_dim < 1:
            raise ConfigError(f"intrinsic_dim must be >= 1, got {self.intrinsic_dim}")

    def to_dict(self) -> Dict:
        return asdict(self)

    @staticmethod
    def from_dict(data: Dict) -> "LossConfig":
        return LossConfig(
            beta=float(data["beta"]),
            intrinsic_dim=int(data["intrinsic_dim"]),
            theta1=float(data.get("theta1", DEFAULT_THETA1)),
            theta2=float(data.get("theta2", DEFAULT_THETA2)),
        )


@dataclass
class LossValue:
    total: float
    mse_part: float
    eig_part: float
    grad_wrt_outputs: np.ndarray


@dataclass
class EigDetails:
    """一次 L_EIG 計算的中間量，供記錄與 gap 檢查使用"""

    input_eigvals: np.ndarray
    output_eigvals: np.ndarray
    gaps: np.ndarray
    beta: float


def _check_same_shape(inputs: np.ndarray, outputs: np.ndarray) -> None:
    if inputs.shape != outputs.shape or inputs.ndim != 2:
        raise ShapeMismatchError(
            f"inputs {inputs.shape} and outputs {outputs.shape} must be equal 2-D shapes"
        )


def mse_loss(inputs, outputs) -> Tuple[float, np.ndarray]:
    """(1/n) Σ ||x_i - x̂_i||²，梯度為 (2/n)(outputs - inputs)"""
    x = np.asarray(inputs, dtype=float)
    x_hat = np.asarray(outputs, dtype=float)
    _check_same_shape(x, x_hat)
    n = x.shape[0]
    diff = x_hat - x
    value = float(np.sum(diff * diff) / n)
    return value, (2.0 / n) * diff


def top_l_eigenvalues(eig: SymmetricEigen, l: int) -> np.ndarray:
    """前 l 大的特徵值（由大到小）"""
    if not 1 <= l <= eig.dim:
        raise ConfigError(f"l must satisfy 1 <= l <= {eig.dim}, got {l}")
    return eig.values[:l].copy()


def eig_penalty_details(
    inputs, outputs, beta: float, l: int, input_eigvals: Optional[np.ndarray] = None
) -> Tuple[float, np.ndarray, EigDetails]:
    """
    L_EIG = Σ_{k<=l} (√λ_k' - √λ̂_k' - β)²。

    輸入端特徵值視為常數；輸出端以一階特徵值擾動求梯度：
    ∂λ̂_k/∂ŷ_j = (2/n)(η̂_k^T (ŷ_j - μ̂)) η̂_k，再乘上 1/(2√λ̂_k)。
    輸入與輸出特徵值依排序名次配對。
    input_eigvals 為同一批 inputs 預先算好的前 l 個特徵值（整批訓練時每個 epoch 都相同）。
    """
    x = np.asarray(inputs, dtype=float)
    x_hat = np.asarray(outputs, dtype=float)
    _check_same_shape(x, x_hat)
    n, m = x.shape
    if n <= m:
        raise BatchTooSmallError(f"eigenvalue penalty needs n > m rows (n={n}, m={m})")
    if not 1 <= l <= m:
        raise ConfigError(f"intrinsic dimension l={l} must satisfy 1 <= l <= m={m}")

    if input_eigvals is None:
        lam = top_l_eigenvalues(sym_eigen(covariance(x)), l)
    else:
        lam = np.asarray(input_eigvals, dtype=float)
        if lam.shape != (l,):
            raise ShapeMismatchError(f"expected {l} input eigenvalues, got shape {lam.shape}")

    mu_hat = x_hat.mean(axis=0)
    eig_out = sym_eigen(covariance(x_hat, mean=mu_hat))
    lam_hat = eig_out.values[:l]
    eta_hat = eig_out.vectors[:, :l]

    sqrt_lam = np.sqrt(np.maximum(lam, 0.0))
    sqrt_lam_hat = np.sqrt(np.maximum(lam_hat, 0.0))
    gaps = sqrt_lam - sqrt_lam_hat
    resid = gaps - beta
    value = float(np.sum(resid * resid))

    # dL/d√λ̂ = -2·resid，d√λ̂/dλ̂ = 1/(2√λ̂)
    coef = -resid / np.sqrt(np.maximum(lam_hat, EIG_GRAD_FLOOR))
    proj = (x_hat - mu_hat) @ eta_hat
    grad = (2.0 / n) * (proj * coef) @ eta_hat.T

    details = EigDetails(
        input_eigvals=lam, output_eigvals=lam_hat.copy(), gaps=gaps, beta=beta
    )
    return value, grad, details


def eig_penalty(
    inputs, outputs, beta: float, l: int, input_eigvals: Optional[np.ndarray] = None
) -> Tuple[float, np.ndarray]:
    value, grad, _ = eig_penalty_details(inputs, outputs, beta, l, input_eigvals)
    return value, grad


def mse_eig_loss(
    inputs, outputs, config: LossConfig, input_eigvals: Optional[np.ndarray] = None
) -> LossValue:
    """θ₁·L_MSE + θ₂·L_EIG，梯度亦同樣加權"""
    mse_value, mse_grad = mse_loss(inputs, outputs)
    eig_value, eig_grad = eig_penalty(
        inputs, outputs, config.beta, config.intrinsic_dim, input_eigvals
    )
    total = config.theta1 * mse_value + config.theta2 * eig_value
    grad = config.theta1 * mse_grad + config.theta2 * eig_grad
    return LossValue(total=total, mse_part=mse_value, eig_part=eig_value, grad_wrt_outputs=grad)


def select_beta(eigvals: Sequence[float]) -> float:
    """
    β 選擇規則：a = max(0.3√λ)、b = min(√λ)；a <= b 時取 a，否則取 b。
    只能傳入「不接近 0」的前 l 個輸入特徵值。
    """
    values = [float(v) for v in eigvals]
    if not values:
        raise ConfigError("select_beta needs at least one eigenvalue")
    for idx, value in enumerate(values):
        if not value > 0:
            raise ConfigError(f"eigenvalue #{idx} = {value} is not positive")
    roots = [math.sqrt(v) for v in values]
    upper = max(0.3 * r for r in roots)
    lower = min(roots)
    return upper if upper <= lower else lower


def resolve_beta(data, l: int, beta: Union[str, float, None]) -> float:
    """'auto'（或 None）時，以整份正規化訓練資料的前 l 個特徵值套用 select_beta"""
    if beta is None or (isinstance(beta, str) and beta.lower() == "auto"):
        eig = sym_eigen(covariance(data))
        return select_beta(top_l_eigenvalues(eig, l))
    try:
        value = float(beta)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"beta must be 'auto' or a positive number, got {beta!r}") from e
    if not value > 0:
        raise ConfigError(f"beta must be positive, got {value}")
    return value


def build_loss_config(
    data,
    intrinsic_dim: int,
    beta: Union[str, float, None] = "auto",
    theta1: float = DEFAULT_THETA1,
    theta2: float = DEFAULT_THETA2,
) -> LossConfig:
    return LossConfig(
        beta=resolve_beta(data, intrinsic_dim, beta),
        intrinsic_dim=intrinsic_dim,
        theta1=theta1,
        theta2=theta2,
    )
