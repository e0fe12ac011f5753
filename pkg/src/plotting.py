"""
SVG 圖表
離群點散佈圖（被標記的點以醒目顏色顯示）與每一維的重建曲線。
"""

import os
from typing import List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from src.linalg import covariance, pca_transform, sym_eigen  # noqa: E402

# 固定 SVG 內的 id 與日期，同樣輸入產生同樣檔案
matplotlib.rcParams["svg.hashsalt"] = "mse-eig"
SVG_METADATA = {"Date": None}

NORMAL_COLOR = "#4c72b0"
FLAGGED_COLOR = "#dd3b2a"


def _projection(points: np.ndarray, column_names: Sequence[str]):
    m = points.shape[1]
    if m <= 3:
        return points, list(column_names)
    eig = sym_eigen(covariance(points))
    centered = points - points.mean(axis=0)
    return pca_transform(centered, eig)[:, :2], ["PC1", "PC2"]


def scatter_svg(
    path: str,
    points,
    flags,
    column_names: Sequence[str],
    title: str,
    labels: Optional[np.ndarray] = None,
) -> str:
    """
    二維直接畫；三維用 3D 軸；超過三維則投影到前兩個主方向。
    labels 有給時，真正的正例以空心圈標出。
    """
    pts = np.asarray(points, dtype=float)
    mask = np.asarray(flags).astype(bool)
    coords, names = _projection(pts, column_names)
    if coords.shape[1] == 1:
        coords = np.column_stack([coords[:, 0], np.zeros(len(coords))])
        names = [names[0], ""]

    fig = plt.figure(figsize=(6, 5))
    if coords.shape[1] == 3:
        ax = fig.add_subplot(111, projection="3d")
        ax.scatter(*coords[~mask].T, s=4, c=NORMAL_COLOR, label="normal")
        ax.scatter(*coords[mask].T, s=10, c=FLAGGED_COLOR, label="flagged")
        ax.set_zlabel(names[2])
    else:
        ax = fig.add_subplot(111)
        ax.scatter(coords[~mask, 0], coords[~mask, 1], s=4, c=NORMAL_COLOR, label="normal")
        ax.scatter(coords[mask, 0], coords[mask, 1], s=10, c=FLAGGED_COLOR, label="flagged")
        if labels is not None:
            positive = np.asarray(labels).astype(bool)
            ax.scatter(
                coords[positive, 0], coords[positive, 1],
                s=30, facecolors="none", edgecolors="black", linewidths=0.6, label="labeled",
            )
    ax.set_xlabel(names[0])
    ax.set_ylabel(names[1])
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    return _save(fig, path)


def curves_svg(path: str, curves: List, title: str = "reconstruction curves") -> str:
    """每一維一個子圖：平均重建值對平均輸入值，虛線為 y = x"""
    count = len(curves)
    fig, axes = plt.subplots(1, count, figsize=(4 * count, 4), squeeze=False)
    for ax, curve in zip(axes[0], curves):
        ax.plot([0.0, 1.0], [0.0, 1.0], linestyle="--", color="gray", linewidth=0.8)
        ax.plot(curve.mean_input, curve.mean_output, marker="o", markersize=3, color=NORMAL_COLOR)
        ax.set_xlim(0.0, 1.0)
        ax.set_ylim(0.0, 1.0)
        ax.set_xlabel(f"x{curve.dimension + 1}")
        ax.set_ylabel(f"reconstructed x{curve.dimension + 1}")
    fig.suptitle(title)
    return _save(fig, path)


def _save(fig, path: str) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=SVG_METADATA)
    plt.close(fig)
    return path
