"""
實驗設定
讀取 config/experiments.json（未知的鍵一律拒絕），與環境變數、CLI 參數合併成 SuiteConfig 或 TrainSettings。
優先順序：CLI > --config JSON > config/experiments.json > 環境變數 > 內建預設。
"""

import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List, Optional, Union

from src.errors import ConfigError
from src.loss import DEFAULT_THETA1, DEFAULT_THETA2

CONFIG_PATH = "config/experiments.json"
SUITES = ("lowdim", "manifold", "highdim", "csv")
SECTIONS = ("train",) + SUITES

ENV_CONFIG = "MSE_EIG_CONFIG"
ENV_OUT_DIR = "MSE_EIG_OUT_DIR"
ENV_SEED = "MSE_EIG_SEED"
ENV_LOG_LEVEL = "MSE_EIG_LOG_LEVEL"

DEFAULT_RATIOS = [round(0.01 * i, 10) for i in range(1, 11)]
DEFAULT_SEEDS = [0, 1, 2, 3, 4]
# 桌面規模以整批訓練，每個 epoch 只有一步
SUITE_LEARNING_RATE = 1e-2


@dataclass
class SuiteConfig:
    suite: str
    ratios: List[float] = field(default_factory=lambda: list(DEFAULT_RATIOS))
    seeds: List[int] = field(default_factory=lambda: list(DEFAULT_SEEDS))
    n_train: int = 2000
    n_test: Optional[int] = None
    datasets: List[str] = field(default_factory=list)
    dims: List[int] = field(default_factory=list)
    hlp_subset: Optional[List[int]] = None
    train_csv: Optional[str] = None
    test_csv: Optional[str] = None
    intrinsic_dim: Optional[int] = None
    epochs: int = 1000
    batch_size: Union[int, str, None] = None
    learning_rate: float = SUITE_LEARNING_RATE
    beta: Union[str, float] = "auto"
    theta1: float = DEFAULT_THETA1
    theta2: float = DEFAULT_THETA2
    record_every: int = 100
    init: str = "auto"
    warmup_epochs: Optional[int] = None
    plot_ratio: float = 0.05

    def __post_init__(self):
        if self.suite not in SUITES:
            raise ConfigError(f"unknown suite {self.suite!r}, expected one of {SUITES}")
        if not self.ratios:
            raise ConfigError("ratios must not be empty")
        for ratio in self.ratios:
            if not 0.0 < ratio < 0.5:
                raise ConfigError(f"outlier ratio must be in (0, 0.5), got {ratio}")
        if not self.seeds:
            raise ConfigError("seeds must not be empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError(f"seeds must be distinct, got {self.seeds}")
        if self.n_train < 2:
            raise ConfigError(f"n_train must be >= 2, got {self.n_train}")
        if self.suite == "lowdim" and not self.datasets:
            self.datasets = ["dataset1", "dataset2", "dataset3"]
        if self.suite == "highdim" and not self.dims:
            self.dims = [50, 100]
        if self.suite == "manifold":
            if self.n_test is None:
                self.n_test = self.n_train
            if self.hlp_subset is None:
                self.hlp_subset = [0, 2]
        if self.suite == "csv":
            if not self.train_csv or not self.test_csv:
                raise ConfigError("csv suite needs train_csv and test_csv")
            if self.intrinsic_dim is None or self.intrinsic_dim < 1:
                raise ConfigError("csv suite needs intrinsic_dim >= 1")

    def dataset_keys(self) -> List[str]:
        """每個 cell 的資料集名稱（與 seed 組合成 cell）"""
        if self.suite == "lowdim":
            return list(self.datasets)
        if self.suite == "highdim":
            return [f"m{m}" for m in self.dims]
        return [self.suite]

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @staticmethod
    def from_dict(data: Dict[str, Any]) -> "SuiteConfig":
        known = {f.name for f in fields(SuiteConfig)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        if "suite" not in data:
            raise ConfigError("config is missing 'suite'")
        try:
            return SuiteConfig(**data)
        except TypeError as e:
            raise ConfigError(f"invalid suite config: {e}") from e


@dataclass
class TrainSettings:
    """單一模型訓練（main.py train）的設定，取自設定檔的 train 區段"""

    epochs: int = 1000
    batch_size: Union[int, str, None] = None
    learning_rate: float = SUITE_LEARNING_RATE
    beta: Union[str, float] = "auto"
    theta1: float = DEFAULT_THETA1
    theta2: float = DEFAULT_THETA2
    record_every: int = 100
    init: str = "auto"
    warmup_epochs: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @staticmethod
    def from_dict(data: Dict[str, Any]) -> "TrainSettings":
        known = {f.name for f in fields(TrainSettings)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown train config keys: {', '.join(unknown)}")
        return TrainSettings(**data)


def _read_json(path: str) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path} is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise ConfigError(f"{path} must contain a JSON object")
    return doc


def load_config(config_path: Optional[str] = None) -> Dict[str, Dict[str, Any]]:
    """載入分節設定檔；檔案不存在時回傳空設定"""
    path = config_path or os.getenv(ENV_CONFIG) or CONFIG_PATH
    if not os.path.exists(path):
        if config_path:
            raise FileNotFoundError(path)
        return {}
    doc = _read_json(path)
    unknown = sorted(set(doc) - set(SECTIONS))
    if unknown:
        raise ConfigError(f"{path}: unknown sections: {', '.join(unknown)}")
    for name, section in doc.items():
        if not isinstance(section, dict):
            raise ConfigError(f"{path}: section {name!r} must be an object")
    return doc


def env_seed() -> Optional[int]:
    raw = os.getenv(ENV_SEED)
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError as e:
        raise ConfigError(f"{ENV_SEED} must be an integer, got {raw!r}") from e


def env_out_dir(default: str = "results") -> str:
    return os.getenv(ENV_OUT_DIR) or default


def shifted_seeds(base: int, count: int) -> List[int]:
    return [base + i for i in range(count)]


def _override_section(path: str, section: str) -> Dict[str, Any]:
    """--config 可以是分節檔（取 train 與 section 區段）或單一區段的扁平設定"""
    doc = _read_json(path)
    if set(doc) <= set(SECTIONS):
        merged = dict(doc.get("train", {}))
        if section != "train":
            merged.update(doc.get(section, {}))
        return merged
    return doc


def train_settings(
    config_path: Optional[str] = None,
    override_path: Optional[str] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> TrainSettings:
    """
    組合單一模型訓練的設定。
    優先順序：overrides（CLI，值為 None 者忽略）> override_path > 設定檔的 train 區段 > 內建預設。
    """
    merged: Dict[str, Any] = dict(load_config(config_path).get("train", {}))
    if override_path:
        merged.update(_override_section(override_path, "train"))
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return TrainSettings.from_dict(merged)


def suite_config(
    suite: str,
    config_path: Optional[str] = None,
    override_path: Optional[str] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> SuiteConfig:
    """
    組合某個 suite 的設定。
    overrides 為 CLI 參數（值為 None 者忽略）；override_path 為 --config 指定的 JSON，
    可以是分節檔或單一 suite 的扁平設定。
    """
    if suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}, expected one of {SUITES}")
    merged: Dict[str, Any] = {"suite": suite}

    seed = env_seed()
    if seed is not None:
        merged["seeds"] = shifted_seeds(seed, len(DEFAULT_SEEDS))

    base = load_config(config_path)
    merged.update(base.get("train", {}))
    merged.update(base.get(suite, {}))

    if override_path:
        merged.update(_override_section(override_path, suite))

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key == "seed":
            merged["seeds"] = shifted_seeds(int(value), len(merged.get("seeds", DEFAULT_SEEDS)))
        else:
            merged[key] = value
    merged["suite"] = suite
    return SuiteConfig.from_dict(merged)


def parse_ratios(text: str) -> List[float]:
    """'0.01..0.10:0.01'（含端點）或逗號分隔的清單"""
    text = text.strip()
    try:
        if ".." in text:
            span, _, step_text = text.partition(":")
            start_text, _, stop_text = span.partition("..")
            start, stop = float(start_text), float(stop_text)
            step = float(step_text) if step_text else 0.01
            if step <= 0 or stop < start:
                raise ConfigError(f"invalid ratio range {text!r}")
            count = int(round((stop - start) / step)) + 1
            return [round(start + i * step, 10) for i in range(count)]
        return [float(part) for part in text.split(",") if part.strip()]
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(f"invalid ratios {text!r}: {e}") from e


def parse_beta(text: Optional[str]) -> Union[str, float, None]:
    if text is None:
        return None
    if text.lower() == "auto":
        return "auto"
    try:
        value = float(text)
    except ValueError as e:
        raise ConfigError(f"beta must be 'auto' or a number, got {text!r}") from e
    if not value > 0:
        raise ConfigError(f"beta must be positive, got {value}")
    return value


def parse_batch_size(text: Optional[str]) -> Union[int, str, None]:
    if text is None:
        return None
    if text == "full":
        return "full"
    try:
        return int(text)
    except ValueError as e:
        raise ConfigError(f"batch size must be an integer or 'full', got {text!r}") from e


def configure_logging(level: Optional[str] = None) -> None:
    """入口程式呼叫；等級取自參數或 MSE_EIG_LOG_LEVEL，預設 INFO"""
    name = (level or os.getenv(ENV_LOG_LEVEL) or "INFO").upper()
    numeric = getattr(logging, name, None)
    if not isinstance(numeric, int):
        raise ConfigError(f"unknown log level {name!r}")
    logging.basicConfig(level=numeric, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
