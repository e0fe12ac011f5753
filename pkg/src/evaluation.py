"""
實驗評估
AUC（Mann–Whitney 統計量）、低維 / 流形 / 高維 / CSV 四組實驗，
以及報告輸出與合併。

每組實驗拆成 cell（資料集 × seed）。同一個 cell 只訓練一次 MSE 與 MSE-eig 模型，
再對所有離群比例計算 AUC；cell 彼此獨立，可分散到多個 job 執行後再合併。
"""

import csv
import json
import logging
import math
import os
import time
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.config import SuiteConfig
from src.data import (
    Dataset,
    gen_highdim_gaussian,
    gen_manifold3d,
    label_hlp,
    load_csv,
    lowdim_family,
    mahalanobis_of,
    normalize_minmax,
)
from src.detect import TrainConfig, TrainedModel, flag_outliers, score, train
from src.errors import ConfigError, DataError, ShapeMismatchError, UndefinedAucError
from src.loss import build_loss_config
from src.network import AutoencoderConfig
from src.plotting import scatter_svg

logger = logging.getLogger(__name__)

METHODS = ("mse", "mse_eig", "mahalanobis")
EXACT_AUC_LIMIT = 10_000
MANIFEST_VERSION = 1

AUC_FILE = "auc.csv"
AUC_PER_SEED_FILE = "auc_per_seed.csv"
MANIFEST_FILE = "manifest.json"


def _midranks(values: np.ndarray) -> np.ndarray:
    """1 起算的名次，同分取平均名次"""
    n = values.shape[0]
    order = np.argsort(values, kind="mergesort")
    ordered = values[order]
    boundaries = np.flatnonzero(np.diff(ordered)) + 1
    starts = np.concatenate([[0], boundaries])
    ends = np.concatenate([boundaries, [n]])
    ranks = np.empty(n)
    ranks[order] = np.repeat((starts + ends + 1) / 2.0, ends - starts)
    return ranks


def auc(scores, labels) -> float:
    """
    (勝 + 0.5·平手) / (P·N)，對所有正負配對計算。
    n <= 10⁴ 時逐一計數，否則用等價的名次和公式。
    """
    s = np.asarray(scores, dtype=float).ravel()
    y = np.asarray(labels).ravel()
    if s.shape != y.shape:
        raise ShapeMismatchError(f"{s.shape[0]} scores for {y.shape[0]} labels")
    if not np.all(np.isfinite(s)):
        raise DataError("scores contain NaN or Inf")
    if not np.all((y == 0) | (y == 1)):
        raise DataError("labels must be 0 or 1")
    positive = s[y == 1]
    negative = s[y == 0]
    p, q = positive.size, negative.size
    if p == 0 or q == 0:
        raise UndefinedAucError(f"AUC needs both classes (positives={p}, negatives={q})")

    if s.size <= EXACT_AUC_LIMIT:
        ordered = np.sort(negative)
        below = np.searchsorted(ordered, positive, side="left")
        upto = np.searchsorted(ordered, positive, side="right")
        wins = int(below.sum())
        ties = int((upto - below).sum())
        return (wins + 0.5 * ties) / (p * q)

    ranks = _midranks(s)
    u = float(ranks[y == 1].sum()) - p * (p + 1) / 2.0
    return u / (p * q)


@dataclass(frozen=True)
class AucEntry:
    experiment_id: str
    dataset: str
    ratio: float
    method: str
    auc: float
    seed: Optional[int] = None

    def key(self) -> Tuple:
        return (self.experiment_id, self.dataset, self.ratio, METHODS.index(self.method))


@dataclass(frozen=True)
class Cell:
    suite: str
    dataset: str
    seed: int

    @property
    def cell_id(self) -> str:
        return f"{self.suite}-{self.dataset}-s{self.seed}"


@dataclass
class ScatterPlot:
    plot_id: str
    points: np.ndarray
    flags: np.ndarray
    column_names: List[str]
    title: str
    labels: Optional[np.ndarray] = None


@dataclass
class CellResult:
    cell: Cell
    entries: List[AucEntry]
    info: Dict
    scatters: List[ScatterPlot] = field(default_factory=list)


@dataclass
class ExperimentReport:
    """entries 為跨 seed 的平均；seed_entries 保留每個 seed 的值"""

    suite: str
    config: SuiteConfig
    seed_entries: List[AucEntry]
    cells: List[Dict]
    scatters: List[ScatterPlot] = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def entries(self) -> List[AucEntry]:
        groups: Dict[Tuple, List[AucEntry]] = {}
        for entry in sorted(self.seed_entries, key=lambda e: (e.key(), e.seed)):
            groups.setdefault(entry.key(), []).append(entry)
        means = []
        for key in sorted(groups):
            items = groups[key]
            first = items[0]
            means.append(
                AucEntry(
                    experiment_id=first.experiment_id,
                    dataset=first.dataset,
                    ratio=first.ratio,
                    method=first.method,
                    auc=math.fsum(e.auc for e in items) / len(items),
                )
            )
        return means

    def mean_auc(self, experiment_id: str, dataset: str, ratio: float, method: str) -> float:
        for entry in self.entries:
            if (entry.experiment_id, entry.dataset, entry.method) == (experiment_id, dataset, method) \
                    and math.isclose(entry.ratio, ratio, abs_tol=1e-12):
                return entry.auc
        raise KeyError((experiment_id, dataset, ratio, method))

    @property
    def manifest(self) -> Dict:
        return {
            "manifest_version": MANIFEST_VERSION,
            "suite": self.suite,
            "config": self.config.to_dict(),
            "cells": self.cells,
            "wall_time": self.wall_time,
            "numpy_version": np.__version__,
        }


def plan_cells(config: SuiteConfig) -> List[Cell]:
    return [
        Cell(suite=config.suite, dataset=dataset, seed=seed)
        for dataset in config.dataset_keys()
        for seed in config.seeds
    ]


def cell_for_index(config: SuiteConfig, index: int) -> Cell:
    cells = plan_cells(config)
    if not 0 <= index < len(cells):
        raise ConfigError(f"cell index {index} out of range (total: {len(cells)})")
    return cells[index]


def _plot_ratio(config: SuiteConfig) -> float:
    return min(config.ratios, key=lambda r: (abs(r - config.plot_ratio), r))


def _train_pair(
    ds: Dataset, intrinsic_dim: int, config: SuiteConfig, seed: int
) -> Tuple[Dict[str, TrainedModel], float]:
    """同一組初始權重分別以 MSE 與 MSE-eig 訓練"""
    net_cfg = AutoencoderConfig(input_dim=ds.m, hidden_dim=intrinsic_dim, seed=seed)
    loss_cfg = build_loss_config(
        ds.samples, intrinsic_dim, config.beta, config.theta1, config.theta2
    )
    common = dict(
        epochs=config.epochs,
        batch_size=config.batch_size,
        learning_rate=config.learning_rate,
        seed=seed,
        record_every=config.record_every,
        init=config.init,
        warmup_epochs=config.warmup_epochs,
    )
    models = {
        "mse": train(ds, net_cfg, TrainConfig(**common)),
        "mse_eig": train(ds, net_cfg, TrainConfig(loss=loss_cfg, **common)),
    }
    return models, loss_cfg.beta


def _model_info(models: Dict[str, TrainedModel], beta: float) -> Dict:
    return {
        "beta": beta,
        "revived_units": {name: m.metadata.get("revived_units", 0) for name, m in models.items()},
        "batch_size": models["mse"].metadata.get("batch_size"),
        "init": models["mse"].metadata.get("init"),
        "warmup_epochs": models["mse_eig"].metadata.get("warmup_epochs", 0),
        "final_loss": {
            name: {
                "total": m.final_loss.total,
                "mse_part": m.final_loss.mse_part,
                "eig_part": m.final_loss.eig_part,
            }
            for name, m in models.items()
        },
    }


def _hlp_cell(
    cell: Cell,
    config: SuiteConfig,
    experiment_id: str,
    norm: Dataset,
    intrinsic_dim: int,
    test: Optional[Dataset] = None,
) -> CellResult:
    """在 norm 上訓練，對 test（未提供時即訓練資料）以 Mahalanobis 前 ⌊δn⌋ 為正例計算 AUC"""
    models, beta = _train_pair(norm, intrinsic_dim, config, cell.seed)
    target = norm if test is None else test
    scores = {name: score(model, target) for name, model in models.items()}
    entries = []
    for ratio in config.ratios:
        labels = label_hlp(target, ratio).labels
        for method in ("mse", "mse_eig"):
            entries.append(
                AucEntry(experiment_id, cell.dataset, ratio, method, auc(scores[method], labels), cell.seed)
            )
    scatters = []
    if cell.seed == config.seeds[0]:
        ratio = _plot_ratio(config)
        points = models["mse_eig"].normalized_inputs(target)
        scatters.append(
            ScatterPlot(
                plot_id=f"{experiment_id}_{cell.dataset}",
                points=points,
                flags=flag_outliers(scores["mse_eig"], ratio),
                column_names=list(target.column_names),
                title=f"{cell.dataset}: MSE-eig flags at ratio {ratio:g} (seed {cell.seed})",
                labels=label_hlp(target, ratio).labels,
            )
        )
    info = _model_info(models, beta)
    info.update({"n_train": norm.n, "n_test": target.n})
    return CellResult(cell=cell, entries=entries, info=info, scatters=scatters)


def _lowdim_cell(config: SuiteConfig, cell: Cell) -> CellResult:
    norm = normalize_minmax(lowdim_family(cell.dataset, config.n_train, cell.seed))
    return _hlp_cell(cell, config, "lowdim", norm, intrinsic_dim=2)


def _highdim_cell(config: SuiteConfig, cell: Cell) -> CellResult:
    m = int(cell.dataset[1:])
    norm = normalize_minmax(gen_highdim_gaussian(config.n_train, m, cell.seed))
    return _hlp_cell(cell, config, "highdim", norm, intrinsic_dim=m)


def _csv_cell(config: SuiteConfig, cell: Cell) -> CellResult:
    train_ds = load_csv(config.train_csv)
    test_ds = load_csv(config.test_csv)
    if test_ds.m != train_ds.m:
        raise ShapeMismatchError(
            f"train CSV has {train_ds.m} columns, test CSV has {test_ds.m}"
        )
    test_ds = replace(test_ds, labels=None)
    return _hlp_cell(cell, config, "csv", normalize_minmax(train_ds), config.intrinsic_dim, test_ds)


def _manifold_cell(config: SuiteConfig, cell: Cell) -> CellResult:
    """
    三個子實驗：
    manifold-ip：測試集只以 IP 為正例；
    manifold-hlp：訓練資料以 parameter1 / parameter3 的 Mahalanobis 前 ⌊δn⌋ 為正例；
    manifold-combined：測試集的 IP 與 HLP 聯集為正例（δ₁ = δ₂）。
    Mahalanobis 基準與 HLP 標記一樣只用 hlp_subset 的欄位（parameter1 / parameter3）。
    """
    seed = cell.seed
    train_ds, _ = gen_manifold3d(config.n_train, config.n_test, config.ratios[0], seed)
    norm = normalize_minmax(train_ds)
    models, beta = _train_pair(norm, 2, config, seed)
    subset = config.hlp_subset

    train_scores = {name: score(model, norm) for name, model in models.items()}
    train_scores["mahalanobis"] = mahalanobis_of(norm, subset)

    entries = []
    scatters = []
    plot_ratio = _plot_ratio(config)
    for ratio in config.ratios:
        _, test = gen_manifold3d(config.n_train, config.n_test, ratio, seed)
        test_scores = {name: score(model, test) for name, model in models.items()}
        test_scores["mahalanobis"] = mahalanobis_of(test, subset)

        hlp_train = label_hlp(norm, ratio, subset).labels
        combined = np.maximum(test.labels, label_hlp(test, ratio, subset).labels)
        for method in METHODS:
            entries.append(AucEntry("manifold-ip", cell.dataset, ratio, method, auc(test_scores[method], test.labels), seed))
            entries.append(AucEntry("manifold-hlp", cell.dataset, ratio, method, auc(train_scores[method], hlp_train), seed))
            entries.append(AucEntry("manifold-combined", cell.dataset, ratio, method, auc(test_scores[method], combined), seed))

        if seed == config.seeds[0] and ratio == plot_ratio:
            scatters.append(
                ScatterPlot(
                    plot_id="manifold-combined",
                    points=models["mse_eig"].normalized_inputs(test),
                    flags=flag_outliers(test_scores["mse_eig"], ratio),
                    column_names=list(test.column_names),
                    title=f"manifold: MSE-eig flags at ratio {ratio:g} (seed {seed})",
                    labels=combined,
                )
            )
    info = _model_info(models, beta)
    info.update({"n_train": config.n_train, "n_test": config.n_test})
    return CellResult(cell=cell, entries=entries, info=info, scatters=scatters)


_CELL_RUNNERS = {
    "lowdim": _lowdim_cell,
    "manifold": _manifold_cell,
    "highdim": _highdim_cell,
    "csv": _csv_cell,
}


def run_cell(config: SuiteConfig, cell: Cell) -> CellResult:
    if cell.suite != config.suite:
        raise ConfigError(f"cell {cell.cell_id} does not belong to suite {config.suite!r}")
    start = time.perf_counter()
    result = _CELL_RUNNERS[config.suite](config, cell)
    elapsed = time.perf_counter() - start
    result.info = {
        "cell_id": cell.cell_id,
        "dataset": cell.dataset,
        "seed": cell.seed,
        **result.info,
        "wall_time": elapsed,
    }
    logger.info("cell %s done in %.1fs (beta=%.6g)", cell.cell_id, elapsed, result.info["beta"])
    return result


def assemble_report(config: SuiteConfig, results: Sequence[CellResult]) -> ExperimentReport:
    entries = [e for r in results for e in r.entries]
    entries.sort(key=lambda e: (e.key(), e.seed))
    cells = sorted((r.info for r in results), key=lambda c: (c["dataset"], c["seed"]))
    return ExperimentReport(
        suite=config.suite,
        config=config,
        seed_entries=entries,
        cells=cells,
        scatters=[s for r in results for s in r.scatters],
        wall_time=sum(c.get("wall_time", 0.0) for c in cells),
    )


def run_suite(config: SuiteConfig) -> ExperimentReport:
    cells = plan_cells(config)
    logger.info("suite %s: %d cell(s)", config.suite, len(cells))
    return assemble_report(config, [run_cell(config, cell) for cell in cells])


def _require_suite(config: SuiteConfig, suite: str) -> None:
    if config.suite != suite:
        raise ConfigError(f"expected a {suite!r} config, got {config.suite!r}")


def run_lowdim_suite(config: SuiteConfig) -> ExperimentReport:
    _require_suite(config, "lowdim")
    return run_suite(config)


def run_manifold_suite(config: SuiteConfig) -> ExperimentReport:
    _require_suite(config, "manifold")
    return run_suite(config)


def run_highdim_suite(config: SuiteConfig) -> ExperimentReport:
    _require_suite(config, "highdim")
    return run_suite(config)


def run_csv_suite(
    train_csv: str,
    test_csv: str,
    intrinsic_dim: int,
    ratios: Sequence[float],
    config: Optional[SuiteConfig] = None,
) -> ExperimentReport:
    for path in (train_csv, test_csv):
        if not os.path.exists(path):
            raise FileNotFoundError(path)
    base = config.to_dict() if config is not None else {"suite": "csv"}
    base.update(
        {
            "suite": "csv",
            "train_csv": train_csv,
            "test_csv": test_csv,
            "intrinsic_dim": intrinsic_dim,
            "ratios": list(ratios),
        }
    )
    return run_suite(SuiteConfig.from_dict(base))


def rerun_from_manifest(manifest: Union[Dict, str]) -> ExperimentReport:
    """以 manifest 中的設定重新執行整組實驗"""
    if isinstance(manifest, str):
        with open(manifest, "r", encoding="utf-8") as f:
            manifest = json.load(f)
    try:
        config = SuiteConfig.from_dict(manifest["config"])
    except KeyError as e:
        raise ConfigError("manifest has no 'config' section") from e
    return run_suite(config)


def _write_rows(path: str, header: List[str], rows: List[List]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def emit_report(report: ExperimentReport, out_dir: str) -> List[str]:
    """寫出 auc.csv（seed 平均）、auc_per_seed.csv、manifest.json 與 scatter_<id>.svg"""
    os.makedirs(out_dir, exist_ok=True)
    paths = []

    path = os.path.join(out_dir, AUC_FILE)
    _write_rows(
        path,
        ["experiment_id", "dataset", "ratio", "method", "auc"],
        [[e.experiment_id, e.dataset, repr(e.ratio), e.method, repr(e.auc)] for e in report.entries],
    )
    paths.append(path)

    path = os.path.join(out_dir, AUC_PER_SEED_FILE)
    _write_rows(
        path,
        ["experiment_id", "dataset", "ratio", "method", "seed", "auc"],
        [
            [e.experiment_id, e.dataset, repr(e.ratio), e.method, e.seed, repr(e.auc)]
            for e in report.seed_entries
        ],
    )
    paths.append(path)

    path = os.path.join(out_dir, MANIFEST_FILE)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report.manifest, f, indent=2, ensure_ascii=False)
        f.write("\n")
    paths.append(path)

    for plot in report.scatters:
        path = os.path.join(out_dir, f"scatter_{plot.plot_id}.svg")
        scatter_svg(path, plot.points, plot.flags, plot.column_names, plot.title, plot.labels)
        paths.append(path)
    return paths


def load_report(report_dir: str) -> ExperimentReport:
    """讀回 emit_report 的輸出（散佈圖除外）"""
    manifest_path = os.path.join(report_dir, MANIFEST_FILE)
    with open(manifest_path, "r", encoding="utf-8") as f:
        try:
            manifest = json.load(f)
        except json.JSONDecodeError as e:
            raise DataError(f"{manifest_path} is not valid JSON: {e}") from e
    config = SuiteConfig.from_dict(manifest["config"])
    entries = []
    seed_path = os.path.join(report_dir, AUC_PER_SEED_FILE)
    with open(seed_path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        for row in reader:
            try:
                entries.append(
                    AucEntry(
                        experiment_id=row["experiment_id"],
                        dataset=row["dataset"],
                        ratio=float(row["ratio"]),
                        method=row["method"],
                        auc=float(row["auc"]),
                        seed=int(row["seed"]),
                    )
                )
            except (KeyError, TypeError, ValueError) as e:
                raise DataError(f"{seed_path}: line {reader.line_num}: {e}") from e
    return ExperimentReport(
        suite=manifest["suite"],
        config=config,
        seed_entries=entries,
        cells=manifest.get("cells", []),
        wall_time=float(manifest.get("wall_time", 0.0)),
    )


def merge_reports(reports: Sequence[ExperimentReport]) -> ExperimentReport:
    """
    合併同一組設定下各 cell 的部分報告。
    同一個 (dataset, seed) 出現多次時保留第一份。
    """
    if not reports:
        raise ConfigError("no reports to merge")
    first = reports[0]
    for other in reports[1:]:
        if other.suite != first.suite or other.config.to_dict() != first.config.to_dict():
            raise ConfigError("cannot merge reports produced by different suite configs")

    seen = set()
    cells: List[Dict] = []
    entries: List[AucEntry] = []
    scatters: List[ScatterPlot] = []
    for report in reports:
        fresh = set()
        for info in report.cells:
            key = (info["dataset"], info["seed"])
            if key in seen:
                logger.warning("duplicate cell %s-s%s skipped", info["dataset"], info["seed"])
                continue
            fresh.add(key)
            cells.append(info)
        entries.extend(e for e in report.seed_entries if (e.dataset, e.seed) in fresh)
        scatters.extend(report.scatters)
        seen |= fresh

    entries.sort(key=lambda e: (e.key(), e.seed))
    cells.sort(key=lambda c: (c["dataset"], c["seed"]))
    return ExperimentReport(
        suite=first.suite,
        config=first.config,
        seed_entries=entries,
        cells=cells,
        scatters=scatters,
        wall_time=sum(c.get("wall_time", 0.0) for c in cells),
    )
