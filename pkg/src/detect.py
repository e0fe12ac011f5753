"""
離群點偵測
訓練流程（每個 epoch 以 seed 洗牌後分批：forward → 損失 → backward → Adam）、
重建誤差評分、離群點標記，以及檢查訓練後模型的方向統計工具。
"""

import csv
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.data import (
    Dataset,
    NormParams,
    apply_normalization,
    denormalize,
    make_rng,
    mahalanobis_of,
    top_k_flags,
)
from src.errors import (
    BatchTooSmallError,
    ConfigError,
    DataError,
    DegenerateInputError,
    DivergenceError,
    ShapeMismatchError,
)
from src.linalg import as_matrix, check_rank, covariance, sym_eigen
from src.loss import LossConfig, LossValue, mse_eig_loss, mse_loss, top_l_eigenvalues
from src.network import (
    AdamState,
    AutoencoderConfig,
    NetworkParams,
    adam_step,
    backward,
    forward,
    init_params,
    load_params_json,
    principal_init,
    revive_dead_units,
    save_params_json,
)

logger = logging.getLogger(__name__)

DEFAULT_EPOCHS = 1000
DEFAULT_LEARNING_RATE = 1e-3
FULL_BATCH_LIMIT = 4096
DEFAULT_MINI_BATCH = 512
DIVERGENCE_LIMIT = 1e6
SHUFFLE_STREAM = 11
INIT_CHOICES = ("auto", "principal", "glorot")


@dataclass(frozen=True)
class TrainConfig:
    """
    loss 為 None 表示只用 MSE；batch_size 為 None 時 n <= 4096 用整批，否則 512。
    init："principal"（主方向初始化）、"glorot"（seed 決定的隨機初始化），
    "auto" 在 hidden_dim == input_dim 時用 principal，否則用 glorot。
    warmup_epochs：MSE-eig 訓練前先以純 MSE 訓練的 epoch 數；
    None 時 glorot 初始化用 epochs 個，principal 初始化不需要。
    """

    epochs: int = DEFAULT_EPOCHS
    batch_size: Union[int, str, None] = None
    learning_rate: float = DEFAULT_LEARNING_RATE
    loss: Optional[LossConfig] = None
    seed: int = 0
    record_every: int = 50
    revive_dead: bool = True
    init: str = "auto"
    warmup_epochs: Optional[int] = None

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.record_every < 1:
            raise ConfigError(f"record_every must be >= 1, got {self.record_every}")
        if isinstance(self.batch_size, str):
            if self.batch_size != "full":
                raise ConfigError(f"batch_size must be an integer or 'full', got {self.batch_size!r}")
        elif self.batch_size is not None and self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.init not in INIT_CHOICES:
            raise ConfigError(f"init must be one of {INIT_CHOICES}, got {self.init!r}")
        if self.warmup_epochs is not None and self.warmup_epochs < 0:
            raise ConfigError(f"warmup_epochs must be >= 0, got {self.warmup_epochs}")

    @property
    def loss_name(self) -> str:
        return "mse" if self.loss is None else "mse-eig"

    def resolve_batch_size(self, n: int) -> int:
        if self.batch_size == "full":
            return n
        if self.batch_size is None:
            return n if n <= FULL_BATCH_LIMIT else DEFAULT_MINI_BATCH
        return min(int(self.batch_size), n)

    def resolve_init(self, net_cfg: AutoencoderConfig) -> str:
        if self.init != "auto":
            return self.init
        return "principal" if net_cfg.hidden_dim == net_cfg.input_dim else "glorot"

    def resolve_warmup(self, init: str) -> int:
        if self.loss is None:
            return 0
        if self.warmup_epochs is not None:
            return self.warmup_epochs
        return 0 if init == "principal" else self.epochs


@dataclass(frozen=True)
class LossRecord:
    epoch: int
    total: float
    mse_part: float
    eig_part: float


@dataclass
class TrainedModel:
    params: NetworkParams
    config: AutoencoderConfig
    norm_params: NormParams
    loss_history: List[LossRecord]
    loss_config: Optional[LossConfig] = None
    metadata: Dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.loss_history:
            raise DataError("trained model must carry at least one loss record")
        if self.norm_params.mins.shape[0] != self.config.input_dim:
            raise ShapeMismatchError(
                f"normalization covers {self.norm_params.mins.shape[0]} columns, "
                f"model has {self.config.input_dim}"
            )

    @property
    def final_loss(self) -> LossRecord:
        return self.loss_history[-1]

    def reconstruct(self, normalized_samples) -> np.ndarray:
        outputs, _ = forward(self.params, normalized_samples)
        return outputs

    def normalized_inputs(self, ds: Union[Dataset, np.ndarray]) -> np.ndarray:
        """
        把資料轉成模型的正規化座標。
        已用同一組 min/max 正規化的 Dataset 直接使用；其餘先還原再套用模型的 min/max。
        """
        if not isinstance(ds, Dataset):
            return apply_normalization(ds, self.norm_params)
        if ds.m != self.config.input_dim:
            raise ShapeMismatchError(
                f"dataset has {ds.m} columns, model expects {self.config.input_dim}"
            )
        if ds.normalized and ds.norm_params is not None:
            if _same_norm(ds.norm_params, self.norm_params):
                return ds.samples
            ds = denormalize(ds)
        return apply_normalization(ds.samples, self.norm_params)


@dataclass
class DirectionalStats:
    """每個主方向 k（k < l）的統計量，座標皆以輸入共變異的特徵向量表示"""

    nu: np.ndarray
    nu_hat: np.ndarray
    lam: np.ndarray
    lam_hat: np.ndarray
    rho: np.ndarray
    slope: np.ndarray

    @property
    def directions(self) -> int:
        return self.lam.shape[0]

    def to_rows(self) -> List[Dict[str, float]]:
        return [
            {
                "direction": k + 1,
                "nu": float(self.nu[k]),
                "nu_hat": float(self.nu_hat[k]),
                "lambda": float(self.lam[k]),
                "lambda_hat": float(self.lam_hat[k]),
                "rho": float(self.rho[k]),
                "slope": float(self.slope[k]),
            }
            for k in range(self.directions)
        ]


@dataclass
class ReconstructionCurve:
    """單一維度的分箱重建曲線（空箱不列出）"""

    dimension: int
    bin_centers: np.ndarray
    counts: np.ndarray
    mean_input: np.ndarray
    mean_output: np.ndarray
    mean_abs_error: np.ndarray


def _same_norm(a: NormParams, b: NormParams) -> bool:
    return (
        a.mins.shape == b.mins.shape
        and np.array_equal(a.mins, b.mins)
        and np.array_equal(a.maxs, b.maxs)
    )


def _batches(order: np.ndarray, batch_size: int, min_rows: int) -> List[np.ndarray]:
    """切成 batch_size 大小；最後一批不足 min_rows 時併入前一批"""
    chunks = [order[i : i + batch_size] for i in range(0, len(order), batch_size)]
    if len(chunks) > 1 and len(chunks[-1]) < min_rows:
        tail = chunks.pop()
        chunks[-1] = np.concatenate([chunks[-1], tail])
    return chunks


def _loss(
    inputs: np.ndarray,
    outputs: np.ndarray,
    config: Optional[LossConfig],
    input_eigvals: Optional[np.ndarray] = None,
) -> LossValue:
    if config is None:
        value, grad = mse_loss(inputs, outputs)
        return LossValue(total=value, mse_part=value, eig_part=0.0, grad_wrt_outputs=grad)
    return mse_eig_loss(inputs, outputs, config, input_eigvals)


def _check_divergence(epoch: int, value: LossValue) -> None:
    if not math.isfinite(value.total) or value.total > DIVERGENCE_LIMIT:
        raise DivergenceError(epoch, value.total)


def _record(epoch: int, params: NetworkParams, x: np.ndarray, config, input_eigvals=None) -> LossRecord:
    outputs, _ = forward(params, x)
    value = _loss(x, outputs, config, input_eigvals)
    _check_divergence(epoch, value)
    return LossRecord(epoch=epoch, total=value.total, mse_part=value.mse_part, eig_part=value.eig_part)


def _run_epoch(
    epoch: int,
    params: NetworkParams,
    state: AdamState,
    x: np.ndarray,
    loss_cfg: Optional[LossConfig],
    batch_size: int,
    rng: np.random.Generator,
    learning_rate: float,
    full_eigvals: Optional[np.ndarray] = None,
) -> Tuple[NetworkParams, AdamState]:
    """一個 epoch：洗牌、分批，每批 forward → 損失 → backward → Adam"""
    n, m = x.shape
    min_rows = m + 1 if loss_cfg is not None else 1
    order = rng.permutation(n) if batch_size < n else np.arange(n)
    for rows in _batches(order, batch_size, min_rows):
        xb = x[rows]
        outputs, cache = forward(params, xb)
        value = _loss(xb, outputs, loss_cfg, full_eigvals if len(rows) == n else None)
        _check_divergence(epoch, value)
        grads = backward(params, cache, value.grad_wrt_outputs)
        params, state = adam_step(params, grads, state, learning_rate)
    return params, state


def _initial_params(
    ds: Dataset, net_cfg: AutoencoderConfig, train_cfg: TrainConfig, init: str
) -> Tuple[NetworkParams, int]:
    if init == "principal":
        return principal_init(net_cfg, ds.samples), 0
    params = init_params(net_cfg)
    revived = 0
    if train_cfg.revive_dead:
        params, revived = revive_dead_units(params, ds.samples)
        if revived:
            logger.info("revived %d inactive hidden unit(s)", revived)
    return params, revived


def train(ds: Dataset, net_cfg: AutoencoderConfig, train_cfg: TrainConfig) -> TrainedModel:
    """
    訓練自編碼器。

    loss 含特徵值項時，每批都重新計算輸出的共變異特徵值（整批訓練時輸入特徵值只算一次）；
    l == m 時使用全部特徵值，l < m 時取前 l 個。
    隨機初始化的 MSE-eig 訓練先以純 MSE 暖身，讓各主方向先重建出來再收縮。
    loss_history 在 epoch 0（暖身之後）、每 record_every 個 epoch 以及最後一個 epoch
    以整份訓練資料計算。
    """
    if not ds.normalized or ds.norm_params is None:
        raise ConfigError("train needs a min-max normalized dataset")
    x = ds.samples
    n, m = x.shape
    if m != net_cfg.input_dim:
        raise ShapeMismatchError(f"dataset has {m} columns, network expects {net_cfg.input_dim}")
    loss_cfg = train_cfg.loss
    batch_size = train_cfg.resolve_batch_size(n)
    if loss_cfg is not None:
        if loss_cfg.intrinsic_dim != net_cfg.hidden_dim:
            raise ConfigError(
                f"loss intrinsic_dim={loss_cfg.intrinsic_dim} must equal "
                f"hidden_dim={net_cfg.hidden_dim}"
            )
        if batch_size <= m:
            raise BatchTooSmallError(
                f"batch size {batch_size} must exceed input dimension {m} for the eigenvalue term"
            )

    init = train_cfg.resolve_init(net_cfg)
    params, revived = _initial_params(ds, net_cfg, train_cfg, init)
    rng = make_rng(train_cfg.seed, SHUFFLE_STREAM)
    lr = train_cfg.learning_rate
    logger.info(
        "training %s: n=%d m=%d l=%d batch=%d epochs=%d lr=%g init=%s",
        train_cfg.loss_name, n, m, net_cfg.hidden_dim, batch_size, train_cfg.epochs, lr, init,
    )

    warmup = train_cfg.resolve_warmup(init)
    if warmup:
        state = AdamState.for_params(params)
        for epoch in range(1, warmup + 1):
            params, state = _run_epoch(epoch, params, state, x, None, batch_size, rng, lr)
        warm = _record(warmup, params, x, None)
        logger.info("mse warm-up: %d epoch(s), mse=%.6g", warmup, warm.mse_part)

    full_eigvals = None
    if loss_cfg is not None:
        full_eigvals = top_l_eigenvalues(sym_eigen(covariance(x)), loss_cfg.intrinsic_dim)
    state = AdamState.for_params(params)
    history = [_record(0, params, x, loss_cfg, full_eigvals)]

    for epoch in range(1, train_cfg.epochs + 1):
        params, state = _run_epoch(
            epoch, params, state, x, loss_cfg, batch_size, rng, lr, full_eigvals
        )
        if epoch % train_cfg.record_every == 0 or epoch == train_cfg.epochs:
            record = _record(epoch, params, x, loss_cfg, full_eigvals)
            history.append(record)
            logger.info(
                "epoch %d: total=%.6g mse=%.6g eig=%.6g",
                epoch, record.total, record.mse_part, record.eig_part,
            )

    metadata = {
        "loss": train_cfg.loss_name,
        "epochs": train_cfg.epochs,
        "batch_size": batch_size,
        "learning_rate": lr,
        "seed": train_cfg.seed,
        "init": init,
        "init_seed": net_cfg.seed if init == "glorot" else None,
        "warmup_epochs": warmup,
        "revived_units": revived,
        "theta1": None if loss_cfg is None else loss_cfg.theta1,
        "theta2": None if loss_cfg is None else loss_cfg.theta2,
        "beta": None if loss_cfg is None else loss_cfg.beta,
        "intrinsic_dim": net_cfg.hidden_dim,
        "n_train": n,
    }
    return TrainedModel(
        params=params,
        config=net_cfg,
        norm_params=ds.norm_params,
        loss_history=history,
        loss_config=loss_cfg,
        metadata=metadata,
    )


def reconstruction_scores(inputs, outputs) -> np.ndarray:
    """每列 (Y - Ŷ)^T (Y - Ŷ)"""
    x = as_matrix(inputs, "inputs")
    x_hat = as_matrix(outputs, "outputs")
    if x.shape != x_hat.shape:
        raise ShapeMismatchError(f"inputs {x.shape} and outputs {x_hat.shape} differ")
    diff = x - x_hat
    return np.sum(diff * diff, axis=1)


def score(model: TrainedModel, ds: Union[Dataset, np.ndarray]) -> np.ndarray:
    """重建誤差平方和；原始資料會先以模型的 min/max 正規化"""
    x = model.normalized_inputs(ds)
    return reconstruction_scores(x, model.reconstruct(x))


def flag_outliers(scores, delta: float) -> np.ndarray:
    if not 0.0 < delta < 1.0:
        raise ConfigError(f"delta must be in (0, 1), got {delta}")
    values = np.asarray(scores, dtype=float)
    return top_k_flags(values, math.floor(delta * values.shape[0]))


def mahalanobis_scores(ds: Dataset, feature_subset: Optional[Sequence[int]] = None) -> np.ndarray:
    return mahalanobis_of(ds, feature_subset)


def directional_stats_from(inputs, outputs, directions: int) -> DirectionalStats:
    """
    以輸入共變異的特徵向量把輸入與重建轉到 Y 座標，
    計算前 directions 個方向的 ν、ν̂、λ、λ̂、相關係數 ρ 與 R̂ₖ 對 Rₖ 的回歸斜率。
    """
    x = as_matrix(inputs, "inputs")
    x_hat = as_matrix(outputs, "outputs")
    if x.shape != x_hat.shape:
        raise ShapeMismatchError(f"inputs {x.shape} and outputs {x_hat.shape} differ")
    eig = sym_eigen(covariance(x))
    if not 1 <= directions <= eig.dim:
        raise ConfigError(f"directions must be in [1, {eig.dim}], got {directions}")
    check_rank(eig, directions)

    basis = eig.vectors[:, :directions]
    y = x @ basis
    y_hat = x_hat @ basis
    nu = y.mean(axis=0)
    nu_hat = y_hat.mean(axis=0)
    r = y - nu
    r_hat = y_hat - nu_hat
    lam = eig.values[:directions].copy()
    lam_hat = np.mean(r_hat * r_hat, axis=0)
    cross = np.mean(r * r_hat, axis=0)
    var_r = np.mean(r * r, axis=0)

    slope = cross / var_r
    denom = np.sqrt(var_r * lam_hat)
    # 常數輸出時相關係數無定義，記為 0
    safe = np.where(denom > 0.0, denom, 1.0)
    rho = np.where(denom > 0.0, np.clip(cross / safe, -1.0, 1.0), 0.0)
    return DirectionalStats(nu=nu, nu_hat=nu_hat, lam=lam, lam_hat=lam_hat, rho=rho, slope=slope)


def directional_stats(model: TrainedModel, ds: Dataset) -> DirectionalStats:
    x = model.normalized_inputs(ds)
    n, m = x.shape
    if n < 10 * m:
        raise DegenerateInputError(f"directional statistics need n >= 10*m rows (n={n}, m={m})")
    return directional_stats_from(x, model.reconstruct(x), model.config.hidden_dim)


def gap_deviation(stats: DirectionalStats, beta: float) -> np.ndarray:
    """|(√λₖ - √λ̂ₖ) - β|"""
    gaps = np.sqrt(np.maximum(stats.lam, 0.0)) - np.sqrt(np.maximum(stats.lam_hat, 0.0))
    return np.abs(gaps - beta)


def direction_split(
    model: TrainedModel, ds: Dataset, scores, delta: float
) -> np.ndarray:
    """
    分數前 ⌊δn⌋ 的點中，主導方向（|Rₖ|/√λₖ 最大者）為 k 的比例。
    回傳長度為 l 的向量，總和為 1。
    """
    flags = flag_outliers(scores, delta)
    if not np.any(flags):
        raise ConfigError(f"delta={delta} flags no rows")
    x = model.normalized_inputs(ds)
    l = model.config.hidden_dim
    eig = sym_eigen(covariance(x))
    check_rank(eig, l)
    whitened = (x - x.mean(axis=0)) @ eig.vectors[:, :l] / np.sqrt(eig.values[:l])
    dominant = np.argmax(np.abs(whitened[flags == 1]), axis=1)
    counts = np.bincount(dominant, minlength=l)
    return counts / counts.sum()


def error_growth_fit(model: TrainedModel, ds: Dataset) -> List[Dict[str, float]]:
    """
    每個方向以過原點的最小平方法擬合 (Yₖ - Ŷₖ)² = a·(Yₖ - νₖ)²。
    R² 採過原點迴歸的非中心化定義 1 - SSE / Σ b²。
    """
    x = model.normalized_inputs(ds)
    x_hat = model.reconstruct(x)
    l = model.config.hidden_dim
    eig = sym_eigen(covariance(x))
    check_rank(eig, l)
    basis = eig.vectors[:, :l]
    y = x @ basis
    y_hat = x_hat @ basis
    rows = []
    for k in range(l):
        a = (y[:, k] - y[:, k].mean()) ** 2
        b = (y[:, k] - y_hat[:, k]) ** 2
        denom = float(a @ a)
        slope = float(a @ b) / denom if denom > 0 else 0.0
        sse = float(np.sum((b - slope * a) ** 2))
        total = float(b @ b)
        r2 = 1.0 - sse / total if total > 0 else 1.0
        rows.append({"direction": k + 1, "slope": slope, "r2": r2})
    return rows


def reconstruction_curves(
    model: TrainedModel, ds: Dataset, bins: int = 20
) -> List[ReconstructionCurve]:
    """每一維依輸入值在 [0, 1] 分箱，計算平均輸入、平均重建與平均 |x̂ - x|"""
    if bins < 1:
        raise ConfigError(f"bins must be >= 1, got {bins}")
    x = model.normalized_inputs(ds)
    x_hat = model.reconstruct(x)
    edges = np.linspace(0.0, 1.0, bins + 1)
    curves = []
    for j in range(x.shape[1]):
        idx = np.clip(np.searchsorted(edges, x[:, j], side="right") - 1, 0, bins - 1)
        counts = np.bincount(idx, minlength=bins)
        keep = counts > 0
        sum_in = np.bincount(idx, weights=x[:, j], minlength=bins)
        sum_out = np.bincount(idx, weights=x_hat[:, j], minlength=bins)
        sum_err = np.bincount(idx, weights=np.abs(x_hat[:, j] - x[:, j]), minlength=bins)
        centers = (edges[:-1] + edges[1:]) / 2.0
        curves.append(
            ReconstructionCurve(
                dimension=j,
                bin_centers=centers[keep],
                counts=counts[keep],
                mean_input=sum_in[keep] / counts[keep],
                mean_output=sum_out[keep] / counts[keep],
                mean_abs_error=sum_err[keep] / counts[keep],
            )
        )
    return curves


def save_model(model: TrainedModel, path: str) -> None:
    extra = {
        "loss_history": [
            [r.epoch, r.total, r.mse_part, r.eig_part] for r in model.loss_history
        ],
        "metadata": model.metadata,
    }
    save_params_json(
        path,
        model.params,
        model.config,
        model.norm_params.to_dict(),
        None if model.loss_config is None else model.loss_config.to_dict(),
        extra=extra,
    )
    logger.info("saved model to %s", path)


def load_model(path: str) -> TrainedModel:
    params, config, doc = load_params_json(path)
    try:
        norm = NormParams.from_dict(doc["normalization"])
        history = [LossRecord(int(e), float(t), float(a), float(b)) for e, t, a, b in doc["loss_history"]]
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"model file {path} is incomplete: {e}") from e
    loss_cfg = doc.get("loss_config")
    return TrainedModel(
        params=params,
        config=config,
        norm_params=norm,
        loss_history=history,
        loss_config=None if loss_cfg is None else LossConfig.from_dict(loss_cfg),
        metadata=doc.get("metadata", {}),
    )


def _open_for_write(path: str):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    return open(path, "w", encoding="utf-8", newline="")


def write_scores_csv(path: str, scores, labels=None) -> None:
    """row_index,score[,label]"""
    values = np.asarray(scores, dtype=float)
    with _open_for_write(path) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["row_index", "score"] + (["label"] if labels is not None else []))
        for i, s in enumerate(values):
            row = [i, repr(float(s))]
            if labels is not None:
                row.append(int(labels[i]))
            writer.writerow(row)


def read_scores_csv(path: str) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or "score" not in reader.fieldnames:
            raise DataError(f"{path}: scores file needs a 'score' column")
        has_label = "label" in reader.fieldnames
        scores, labels = [], []
        for row in reader:
            try:
                scores.append(float(row["score"]))
                if has_label:
                    labels.append(int(row["label"]))
            except (TypeError, ValueError) as e:
                raise DataError(f"{path}: line {reader.line_num}: {e}") from e
    return np.array(scores), (np.array(labels) if has_label else None)


def write_loss_history_csv(path: str, history: Sequence[LossRecord]) -> None:
    """epoch,total,mse_part,eig_part"""
    with _open_for_write(path) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["epoch", "total", "mse_part", "eig_part"])
        for r in history:
            writer.writerow([r.epoch, repr(r.total), repr(r.mse_part), repr(r.eig_part)])


def read_loss_history_csv(path: str) -> List[LossRecord]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        records = []
        for row in reader:
            try:
                records.append(
                    LossRecord(
                        epoch=int(row["epoch"]),
                        total=float(row["total"]),
                        mse_part=float(row["mse_part"]),
                        eig_part=float(row["eig_part"]),
                    )
                )
            except (KeyError, TypeError, ValueError) as e:
                raise DataError(f"{path}: line {reader.line_num}: {e}") from e
    return records


def write_curves_csv(path: str, curves: Sequence[ReconstructionCurve]) -> None:
    """dimension,bin_center,count,mean_input,mean_output,mean_abs_error"""
    with _open_for_write(path) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["dimension", "bin_center", "count", "mean_input", "mean_output", "mean_abs_error"])
        for curve in curves:
            for i in range(len(curve.bin_centers)):
                writer.writerow([
                    curve.dimension + 1,
                    repr(float(curve.bin_centers[i])),
                    int(curve.counts[i]),
                    repr(float(curve.mean_input[i])),
                    repr(float(curve.mean_output[i])),
                    repr(float(curve.mean_abs_error[i])),
                ])
