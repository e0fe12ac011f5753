"""
自編碼器網路
單一隱藏層（寬度 = 內在維度 l）、ReLU 隱藏層、sigmoid 輸出層，
手動 forward / backward 與 Adam 最佳化器。
"""

import json
import os
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from src.errors import ConfigError, DataError, NumericError, ShapeMismatchError, StaleCacheError
from src.linalg import as_matrix, check_rank, covariance, sym_eigen

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
MODEL_FORMAT_VERSION = 1
# 主方向初始化：隱藏層在整批資料上的最小值，以及求 logit 前平均值的裁切範圍
ACTIVE_MARGIN = 1.0
LOGIT_CLIP = 0.05


@dataclass(frozen=True)
class AutoencoderConfig:
    input_dim: int
    hidden_dim: int
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.hidden_dim <= self.input_dim:
            raise ConfigError(
                f"hidden_dim must satisfy 1 <= hidden_dim <= input_dim "
                f"(got hidden_dim={self.hidden_dim}, input_dim={self.input_dim})"
            )


@dataclass
class NetworkParams:
    """w1: l×m, b1: l, w2: m×l, b2: m。梯度與 Adam 動量也用同一形狀。"""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    NAMES = ("w1", "b1", "w2", "b2")

    @property
    def input_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w1.shape[0]

    def arrays(self) -> Tuple[np.ndarray, ...]:
        return tuple(getattr(self, name) for name in self.NAMES)

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(arr)) for arr in self.arrays())

    def check_finite(self, what: str = "parameters") -> None:
        if not self.is_finite():
            raise NumericError(f"{what} contain NaN or Inf")

    def copy(self) -> "NetworkParams":
        return NetworkParams(*(arr.copy() for arr in self.arrays()))

    def scaled(self, factor: float) -> "NetworkParams":
        return NetworkParams(*(arr * factor for arr in self.arrays()))

    @staticmethod
    def zeros_like(other: "NetworkParams") -> "NetworkParams":
        return NetworkParams(*(np.zeros_like(arr) for arr in other.arrays()))

    def same_shape(self, other: "NetworkParams") -> bool:
        return all(a.shape == b.shape for a, b in zip(self.arrays(), other.arrays()))


@dataclass
class AdamState:
    first: NetworkParams
    second: NetworkParams
    t: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS

    @staticmethod
    def for_params(params: NetworkParams) -> "AdamState":
        return AdamState(
            first=NetworkParams.zeros_like(params),
            second=NetworkParams.zeros_like(params),
        )


@dataclass
class ForwardCache:
    """backward 需要的前向中間值，綁定產生它的 params 物件"""

    params: NetworkParams
    batch: np.ndarray
    pre_hidden: np.ndarray
    hidden: np.ndarray
    outputs: np.ndarray


def glorot_bound(fan_in: int, fan_out: int) -> float:
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


def init_params(config: AutoencoderConfig) -> NetworkParams:
    """Glorot-uniform 權重、零偏差，只由 seed 決定"""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([config.seed, 7])))
    m, l = config.input_dim, config.hidden_dim
    bound = glorot_bound(m, l)
    w1 = rng.uniform(-bound, bound, size=(l, m))
    w2 = rng.uniform(-bound, bound, size=(m, l))
    params = NetworkParams(w1=w1, b1=np.zeros(l), w2=w2, b2=np.zeros(m))
    params.check_finite()
    return params


def principal_init(config: AutoencoderConfig, batch) -> NetworkParams:
    """
    以資料的前 l 個主方向建立初始權重（不用亂數）。

    隱藏單元 k 輸出第 k 個主方向的標準化座標再加上偏移，整批資料的最小值為 ACTIVE_MARGIN，
    所以每個單元對所有列都在 ReLU 的線性區。輸出層把座標還原成 x - ν，
    乘上 sigmoid 在 ν 的斜率倒數 1/(ν(1-ν)) 後加上 logit(ν)，
    初始重建在平均值附近即為 x 投影到前 l 個主方向。
    """
    x = as_matrix(batch, "batch")
    m, l = config.input_dim, config.hidden_dim
    if x.shape[1] != m:
        raise ShapeMismatchError(f"batch has {x.shape[1]} columns, network expects {m}")
    mean = x.mean(axis=0)
    eig = sym_eigen(covariance(x, mean=mean))
    check_rank(eig, l)
    basis = eig.vectors[:, :l]
    scale = np.sqrt(eig.values[:l])

    w1 = basis.T / scale[:, None]
    coords = (x - mean) @ w1.T
    offset = ACTIVE_MARGIN - coords.min(axis=0)
    b1 = offset - w1 @ mean

    nu = np.clip(mean, LOGIT_CLIP, 1.0 - LOGIT_CLIP)
    w2 = (basis * scale) / (nu * (1.0 - nu))[:, None]
    b2 = np.log(nu / (1.0 - nu)) - w2 @ offset
    params = NetworkParams(w1=w1, b1=b1, w2=w2, b2=b2)
    params.check_finite()
    return params


def sigmoid(z: np.ndarray) -> np.ndarray:
    # 兩側分開算，避免 exp 溢位
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def forward(params: NetworkParams, batch) -> Tuple[np.ndarray, ForwardCache]:
    """reconstruction = sigmoid(w2 · relu(w1 · x + b1) + b2)，逐列計算"""
    x = np.asarray(batch, dtype=float)
    if x.ndim != 2 or x.shape[1] != params.input_dim:
        raise ShapeMismatchError(
            f"batch shape {x.shape} does not match input_dim {params.input_dim}"
        )
    pre_hidden = x @ params.w1.T + params.b1
    hidden = np.maximum(pre_hidden, 0.0)
    outputs = sigmoid(hidden @ params.w2.T + params.b2)
    cache = ForwardCache(
        params=params, batch=x, pre_hidden=pre_hidden, hidden=hidden, outputs=outputs
    )
    return outputs, cache


def backward(params: NetworkParams, cache: ForwardCache, grad_wrt_outputs) -> NetworkParams:
    """
    由輸出端梯度反傳到所有參數。ReLU 在 0 的次梯度取 0。
    cache 必須來自同一個 params 物件的 forward。
    """
    if cache.params is not params:
        raise StaleCacheError("forward cache was produced by a different parameter set")
    grad_out = np.asarray(grad_wrt_outputs, dtype=float)
    if grad_out.shape != cache.outputs.shape:
        raise ShapeMismatchError(
            f"gradient shape {grad_out.shape} does not match outputs {cache.outputs.shape}"
        )
    out = cache.outputs
    d_pre_out = grad_out * out * (1.0 - out)
    grad_w2 = d_pre_out.T @ cache.hidden
    grad_b2 = d_pre_out.sum(axis=0)
    d_hidden = d_pre_out @ params.w2
    d_pre_hidden = d_hidden * (cache.pre_hidden > 0.0)
    grad_w1 = d_pre_hidden.T @ cache.batch
    grad_b1 = d_pre_hidden.sum(axis=0)
    return NetworkParams(w1=grad_w1, b1=grad_b1, w2=grad_w2, b2=grad_b2)


def adam_step(
    params: NetworkParams, grads: NetworkParams, state: AdamState, lr: float
) -> Tuple[NetworkParams, AdamState]:
    """標準 Adam（含 bias correction），回傳新的 params 與 state"""
    if lr <= 0:
        raise ConfigError(f"learning rate must be positive, got {lr}")
    if not (params.same_shape(grads) and params.same_shape(state.first)):
        raise ShapeMismatchError("gradient / moment shapes do not match parameters")
    grads.check_finite("gradients")

    t = state.t + 1
    b1, b2 = state.beta1, state.beta2
    new_first, new_second, new_params = [], [], []
    for p, g, m1, m2 in zip(
        params.arrays(), grads.arrays(), state.first.arrays(), state.second.arrays()
    ):
        m1 = b1 * m1 + (1.0 - b1) * g
        m2 = b2 * m2 + (1.0 - b2) * g * g
        m_hat = m1 / (1.0 - b1**t)
        v_hat = m2 / (1.0 - b2**t)
        new_params.append(p - lr * m_hat / (np.sqrt(v_hat) + state.eps))
        new_first.append(m1)
        new_second.append(m2)

    updated = NetworkParams(*new_params)
    new_state = AdamState(
        first=NetworkParams(*new_first),
        second=NetworkParams(*new_second),
        t=t,
        beta1=b1,
        beta2=b2,
        eps=state.eps,
    )
    return updated, new_state


def revive_dead_units(params: NetworkParams, batch) -> Tuple[NetworkParams, int]:
    """
    對整批資料都不活化的隱藏單元，把它的輸入權重取負號。
    權重絕對值不變，仍在 Glorot 範圍內。回傳 (新參數, 取負號的單元數)。
    """
    x = np.asarray(batch, dtype=float)
    pre_hidden = x @ params.w1.T + params.b1
    dead = ~np.any(pre_hidden > 0.0, axis=0)
    if not np.any(dead):
        return params, 0
    revived = params.copy()
    revived.w1[dead] = -revived.w1[dead]
    return revived, int(np.sum(dead))


def params_to_dict(params: NetworkParams) -> Dict[str, list]:
    return {name: arr.tolist() for name, arr in zip(NetworkParams.NAMES, params.arrays())}


def params_from_dict(data: Dict[str, list], input_dim: int, hidden_dim: int) -> NetworkParams:
    try:
        params = NetworkParams(
            w1=np.array(data["w1"], dtype=float).reshape(hidden_dim, input_dim),
            b1=np.array(data["b1"], dtype=float).reshape(hidden_dim),
            w2=np.array(data["w2"], dtype=float).reshape(input_dim, hidden_dim),
            b2=np.array(data["b2"], dtype=float).reshape(input_dim),
        )
    except (KeyError, ValueError, TypeError) as e:
        raise DataError(f"invalid parameter arrays in model file: {e}") from e
    params.check_finite()
    return params


def save_params_json(
    path: str,
    params: NetworkParams,
    config: AutoencoderConfig,
    normalization: Dict[str, list],
    loss_config: Optional[Dict],
    extra: Optional[Dict] = None,
) -> None:
    """模型檔：單一 JSON 文件，陣列以 row-major 巢狀 list 儲存（float repr 可精確還原）"""
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "input_dim": config.input_dim,
        "hidden_dim": config.hidden_dim,
        "seed": config.seed,
        **params_to_dict(params),
        "normalization": normalization,
        "loss_config": loss_config,
    }
    if extra:
        doc.update(extra)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")


def load_params_json(path: str) -> Tuple[NetworkParams, AutoencoderConfig, Dict]:
    """回傳 (params, config, 完整 JSON 文件)"""
    with open(path, "r", encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise DataError(f"model file {path} is not valid JSON: {e}") from e
    try:
        config = AutoencoderConfig(
            input_dim=int(doc["input_dim"]),
            hidden_dim=int(doc["hidden_dim"]),
            seed=int(doc.get("seed", 0)),
        )
    except KeyError as e:
        raise DataError(f"model file {path} is missing {e}") from e
    params = params_from_dict(doc, config.input_dim, config.hidden_dim)
    return params, config, doc
