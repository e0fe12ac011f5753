"""
資料集模組
合成資料產生器（皆以 seed 決定）、min-max 正規化、HLP / IP 標記，
以及 CSV 讀寫與產生器 manifest。
"""

import csv
import json
import math
import os
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.errors import (
    ConfigError,
    CsvParseError,
    DataError,
    DegenerateColumnError,
    ShapeMismatchError,
)
from src.linalg import as_matrix, cholesky, covariance, mahalanobis_sq, sym_eigen

LABEL_COLUMN = "label"

# 低維度資料集族群（兩維、內在維度 2）
LOWDIM_FAMILIES = {
    "dataset1": {"mean": [0.0, 0.0], "cov": [[1.0, 0.0], [0.0, 0.25]]},
    "dataset2": {"mean": [0.0, 0.0], "cov": [[1.0, 0.6], [0.6, 0.5]]},
    # 雜訊 ±4 落在第一維的高斯範圍內，但把第二維的範圍撐到高斯部分的兩倍以上
    "dataset3": {
        "mean": [0.0, 0.0],
        "cov": [[4.0, 0.0], [0.0, 0.25]],
        "noise_fraction": 0.01,
        "noise_scale": 4.0,
    },
}

MANIFOLD_COLUMNS = ["parameter1", "parameter2", "parameter3"]
IP_OFFSET_RANGE = (3.0, 6.0)
HIGHDIM_VARIANCE_RANGE = (0.25, 4.0)


@dataclass(frozen=True)
class NormParams:
    mins: np.ndarray
    maxs: np.ndarray

    @property
    def ranges(self) -> np.ndarray:
        return self.maxs - self.mins

    def to_dict(self) -> Dict[str, list]:
        return {"min": self.mins.tolist(), "max": self.maxs.tolist()}

    @staticmethod
    def from_dict(data: Dict[str, list]) -> "NormParams":
        try:
            mins = np.array(data["min"], dtype=float)
            maxs = np.array(data["max"], dtype=float)
        except (KeyError, TypeError, ValueError) as e:
            raise DataError(f"invalid normalization parameters: {e}") from e
        if mins.shape != maxs.shape or mins.ndim != 1:
            raise DataError("normalization min/max must be equal-length vectors")
        return NormParams(mins=mins, maxs=maxs)


@dataclass
class Dataset:
    samples: np.ndarray
    column_names: List[str]
    labels: Optional[np.ndarray] = None
    normalized: bool = False
    norm_params: Optional[NormParams] = None
    provenance: Dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = as_matrix(self.samples, "samples")
        n, m = self.samples.shape
        if len(self.column_names) != m:
            raise ShapeMismatchError(
                f"{len(self.column_names)} column names for {m} columns"
            )
        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.shape != (n,):
                raise ShapeMismatchError(f"labels must have length {n}, got {labels.shape}")
            if not np.all((labels == 0) | (labels == 1)):
                raise DataError("labels must be 0 or 1")
            self.labels = labels.astype(int)
        if self.normalized:
            if self.norm_params is None:
                raise DataError("normalized dataset must carry norm_params")
            if np.any(self.samples < 0.0) or np.any(self.samples > 1.0):
                raise DataError("normalized dataset has entries outside [0, 1]")

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def m(self) -> int:
        return self.samples.shape[1]

    def with_labels(self, labels) -> "Dataset":
        return replace(self, labels=np.asarray(labels))

    def take(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return replace(
            self,
            samples=self.samples[rows],
            labels=None if self.labels is None else self.labels[rows],
        )


def default_column_names(m: int) -> List[str]:
    return [f"c{j + 1}" for j in range(m)]


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """可攜的 64 位元 PCG64 產生器；同一 seed 的不同 stream 互相獨立"""
    if seed < 0:
        raise ConfigError(f"seed must be non-negative, got {seed}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, stream])))


def box_muller(rng: np.random.Generator, shape: Tuple[int, ...]) -> np.ndarray:
    """Box–Muller 標準常態樣本"""
    count = int(np.prod(shape))
    pairs = (count + 1) // 2
    u1 = 1.0 - rng.random(pairs)  # (0, 1]
    u2 = rng.random(pairs)
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    z = np.empty(2 * pairs)
    z[0::2] = radius * np.cos(angle)
    z[1::2] = radius * np.sin(angle)
    return z[:count].reshape(shape)


def gen_gaussian(
    n: int,
    mean,
    cov,
    seed: int,
    column_names: Optional[List[str]] = None,
    stream: int = 0,
) -> Dataset:
    """rows = mean + L z，L = cholesky(cov)，z 為 Box–Muller 標準常態"""
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    mu = np.asarray(mean, dtype=float)
    lower = cholesky(cov)
    m = lower.shape[0]
    if mu.shape != (m,):
        raise ShapeMismatchError(f"mean has shape {mu.shape}, covariance is {m}x{m}")
    z = box_muller(make_rng(seed, stream), (n, m))
    samples = mu + z @ lower.T
    return Dataset(
        samples=samples,
        column_names=column_names or default_column_names(m),
        provenance={
            "generator": "gaussian",
            "params": {"n": n, "mean": mu.tolist(), "cov": np.asarray(cov, float).tolist()},
            "seed": seed,
        },
    )


def gen_noisy_gaussian(
    n: int,
    mean,
    cov,
    noise_fraction: float,
    noise_scale: float,
    seed: int,
    column_names: Optional[List[str]] = None,
) -> Dataset:
    """
    高斯樣本中 ⌊noise_fraction·n⌋ 列換成 mean + noise_scale·u，u ~ Uniform[-1, 1]^m。
    雜訊用獨立的 stream，noise_fraction = 0 時與 gen_gaussian 完全相同。
    """
    if not 0.0 <= noise_fraction <= 0.2:
        raise ConfigError(f"noise_fraction must be in [0, 0.2], got {noise_fraction}")
    base = gen_gaussian(n, mean, cov, seed, column_names)
    count = math.floor(noise_fraction * n)
    samples = base.samples.copy()
    replaced: List[int] = []
    if count > 0:
        rng = make_rng(seed, 1)
        rows = np.sort(rng.choice(n, size=count, replace=False))
        u = rng.uniform(-1.0, 1.0, size=(count, base.m))
        samples[rows] = np.asarray(mean, dtype=float) + noise_scale * u
        replaced = rows.tolist()
    provenance = {
        "generator": "noisy_gaussian",
        "params": {
            **base.provenance["params"],
            "noise_fraction": noise_fraction,
            "noise_scale": noise_scale,
            "noise_distribution": "uniform",
            "replaced_rows": replaced,
        },
        "seed": seed,
    }
    return replace(base, samples=samples, provenance=provenance)


def lowdim_family(name: str, n: int, seed: int) -> Dataset:
    """dataset1：對角共變異；dataset2：非對角；dataset3：對角加非高斯雜訊"""
    if name not in LOWDIM_FAMILIES:
        raise ConfigError(f"unknown low-dimensional family {name!r}")
    family = LOWDIM_FAMILIES[name]
    if "noise_fraction" in family:
        ds = gen_noisy_gaussian(
            n, family["mean"], family["cov"], family["noise_fraction"], family["noise_scale"], seed
        )
    else:
        ds = gen_gaussian(n, family["mean"], family["cov"], seed)
    ds.provenance["family"] = name
    return ds


def _manifold_sample(n: int, seed: int, stream: int) -> np.ndarray:
    base = gen_gaussian(n, [0.0, 0.0], np.eye(2), seed, stream=stream).samples
    p1, p3 = base[:, 0], base[:, 1]
    return np.column_stack([p1, p1 * p1, p3])


def gen_manifold3d(
    n_train: int, n_test: int, ip_ratio: float, seed: int
) -> Tuple[Dataset, Dataset]:
    """
    三維、內在維度 2 的流形：parameter1 / parameter3 為近乎不相關的二維高斯，
    parameter2 = parameter1²。測試集另取新樣本，其中 ⌊δ₁·n_test⌋ 列的 parameter2
    加上 ±[3σ, 6σ] 的偏移離開流形（σ 為 parameter2 的標準差），標記為 1。
    """
    if not 0.0 < ip_ratio < 0.5:
        raise ConfigError(f"ip_ratio must be in (0, 0.5), got {ip_ratio}")
    train_samples = _manifold_sample(n_train, seed, stream=0)
    test_samples = _manifold_sample(n_test, seed, stream=1)

    count = math.floor(ip_ratio * n_test)
    sigma = float(np.std(test_samples[:, 1]))
    rng = make_rng(seed, 2)
    rows = np.sort(rng.choice(n_test, size=count, replace=False))
    magnitude = rng.uniform(IP_OFFSET_RANGE[0] * sigma, IP_OFFSET_RANGE[1] * sigma, size=count)
    sign = np.where(rng.random(count) < 0.5, -1.0, 1.0)
    test_samples[rows, 1] = test_samples[rows, 1] + sign * magnitude
    labels = np.zeros(n_test, dtype=int)
    labels[rows] = 1

    params = {
        "n_train": n_train,
        "n_test": n_test,
        "ip_ratio": ip_ratio,
        "ip_offset_sigmas": list(IP_OFFSET_RANGE),
    }
    train = Dataset(
        samples=train_samples,
        column_names=list(MANIFOLD_COLUMNS),
        provenance={"generator": "manifold3d/train", "params": params, "seed": seed},
    )
    test = Dataset(
        samples=test_samples,
        column_names=list(MANIFOLD_COLUMNS),
        labels=labels,
        provenance={"generator": "manifold3d/test", "params": params, "seed": seed},
    )
    return train, test


def gen_highdim_gaussian(n: int, m: int, seed: int) -> Dataset:
    """對角共變異的高維高斯，變異數由 seed 在 [0.25, 4] 間 log-uniform 抽出"""
    if m < 2:
        raise ConfigError(f"m must be >= 2, got {m}")
    low, high = HIGHDIM_VARIANCE_RANGE
    variances = np.exp(make_rng(seed, 3).uniform(math.log(low), math.log(high), size=m))
    ds = gen_gaussian(n, np.zeros(m), np.diag(variances), seed)
    ds.provenance = {
        "generator": "highdim_gaussian",
        "params": {"n": n, "m": m, "variances": variances.tolist()},
        "seed": seed,
    }
    return ds


def normalize_minmax(ds: Dataset) -> Dataset:
    """每欄 (x - min) / (max - min)；已正規化的資料會組合正規化參數以便還原"""
    mins = ds.samples.min(axis=0)
    maxs = ds.samples.max(axis=0)
    for j, name in enumerate(ds.column_names):
        if not maxs[j] > mins[j]:
            raise DegenerateColumnError(name)
    scaled = (ds.samples - mins) / (maxs - mins)
    if ds.normalized and ds.norm_params is not None:
        prev = ds.norm_params
        params = NormParams(
            mins=prev.mins + mins * prev.ranges, maxs=prev.mins + maxs * prev.ranges
        )
    else:
        params = NormParams(mins=mins, maxs=maxs)
    return replace(ds, samples=scaled, normalized=True, norm_params=params)


def apply_normalization(samples, params: NormParams) -> np.ndarray:
    """以既有 min/max 轉換（不裁切，測試資料可能超出 [0, 1]）"""
    x = as_matrix(samples, "samples")
    if x.shape[1] != params.mins.shape[0]:
        raise ShapeMismatchError(
            f"samples have {x.shape[1]} columns, normalization has {params.mins.shape[0]}"
        )
    return (x - params.mins) / params.ranges


def denormalize(ds: Dataset) -> Dataset:
    if not ds.normalized or ds.norm_params is None:
        return ds
    raw = ds.samples * ds.norm_params.ranges + ds.norm_params.mins
    return replace(ds, samples=raw, normalized=False, norm_params=None)


def top_k_flags(scores, k: int) -> np.ndarray:
    """分數最高的 k 列標 1；同分依列索引由小到大"""
    values = np.asarray(scores, dtype=float)
    n = values.shape[0]
    order = np.lexsort((np.arange(n), -values))
    flags = np.zeros(n, dtype=int)
    flags[order[:k]] = 1
    return flags


def _subset(ds: Dataset, feature_subset: Optional[Sequence[int]]) -> np.ndarray:
    if feature_subset is None:
        return ds.samples
    cols = list(feature_subset)
    if not cols or any(not 0 <= c < ds.m for c in cols):
        raise ConfigError(f"feature_subset {cols} out of range for {ds.m} columns")
    return ds.samples[:, cols]


def mahalanobis_of(ds: Dataset, feature_subset: Optional[Sequence[int]] = None) -> np.ndarray:
    """各列對資料集自身平均 / 共變異的 Mahalanobis 距離平方"""
    x = _subset(ds, feature_subset)
    eig = sym_eigen(covariance(x))
    return mahalanobis_sq(x, x.mean(axis=0), eig)


def label_hlp(
    ds: Dataset, ratio: float, feature_subset: Optional[Sequence[int]] = None
) -> Dataset:
    """Mahalanobis 距離前 ⌊δ₂·n⌋ 名標為 1（HLP）"""
    if not 0.0 < ratio < 0.5:
        raise ConfigError(f"HLP ratio must be in (0, 0.5), got {ratio}")
    scores = mahalanobis_of(ds, feature_subset)
    return ds.with_labels(top_k_flags(scores, math.floor(ratio * ds.n)))


def _format_float(value: float) -> str:
    return repr(float(value))


def save_csv(ds: Dataset, path: str, include_labels: bool = True) -> None:
    """UTF-8、LF 換行；浮點以 repr 輸出，讀回可精確還原"""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with_labels = include_labels and ds.labels is not None
    header = list(ds.column_names) + ([LABEL_COLUMN] if with_labels else [])
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for i, row in enumerate(ds.samples):
            cells = [_format_float(v) for v in row]
            if with_labels:
                cells.append(str(int(ds.labels[i])))
            writer.writerow(cells)


def _parse_header(cells: List[str]) -> Tuple[List[str], bool]:
    names = [c.strip() for c in cells]
    has_label = bool(names) and names[-1] == LABEL_COLUMN
    columns = names[:-1] if has_label else names
    if not columns:
        raise CsvParseError("header has no feature columns", 1)
    if any(not name for name in columns):
        raise CsvParseError("header has an empty column name", 1)
    if LABEL_COLUMN in columns:
        raise CsvParseError("'label' is only allowed as the last column", 1)
    if len(set(columns)) != len(columns):
        raise CsvParseError("header has duplicate column names", 1)
    return columns, has_label


def load_csv(path: str) -> Dataset:
    """讀取資料集 CSV；格式錯誤時回報行號"""
    rows: List[List[float]] = []
    labels: List[int] = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = None
        for cells in reader:
            line = reader.line_num
            if not cells or all(not c.strip() for c in cells):
                continue
            if header is None:
                header = _parse_header(cells)
                continue
            columns, has_label = header
            expected = len(columns) + (1 if has_label else 0)
            if len(cells) != expected:
                raise CsvParseError(f"expected {expected} cells, got {len(cells)}", line)
            try:
                values = [float(c) for c in cells[: len(columns)]]
            except ValueError as e:
                raise CsvParseError(f"non-numeric cell ({e})", line) from e
            if not all(math.isfinite(v) for v in values):
                raise CsvParseError("non-finite value", line)
            rows.append(values)
            if has_label:
                raw = cells[-1].strip()
                if raw not in ("0", "1"):
                    raise CsvParseError(f"label must be 0 or 1, got {raw!r}", line)
                labels.append(int(raw))
    if header is None:
        raise CsvParseError("file is empty", 1)
    if not rows:
        raise CsvParseError("file has a header but no data rows", 2)
    columns, has_label = header
    return Dataset(
        samples=np.array(rows, dtype=float),
        column_names=columns,
        labels=np.array(labels, dtype=int) if has_label else None,
        provenance={"generator": "csv", "params": {"path": os.path.abspath(path)}, "seed": None},
    )


def manifest_path_for(csv_path: str) -> str:
    stem, _ = os.path.splitext(csv_path)
    return f"{stem}.manifest.json"


def write_generator_manifest(ds: Dataset, csv_path: str) -> str:
    """在 CSV 旁寫出 {generator, params, seed}"""
    path = manifest_path_for(csv_path)
    doc = {
        "generator": ds.provenance.get("generator"),
        "params": ds.provenance.get("params", {}),
        "seed": ds.provenance.get("seed"),
    }
    if "family" in ds.provenance:
        doc["family"] = ds.provenance["family"]
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2, ensure_ascii=False)
        f.write("\n")
    return path
