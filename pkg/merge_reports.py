#!/usr/bin/env python3
"""
合併多個 cell 的部分報告
用於 Matrix Strategy 中合併各個 run_cell job 的輸出
"""

import os
import shutil
import sys
from pathlib import Path
from typing import List

from dotenv import load_dotenv

from src.config import configure_logging, env_out_dir
from src.errors import MseEigError
from src.evaluation import MANIFEST_FILE, emit_report, load_report, merge_reports

load_dotenv()


def find_report_dirs(root: str) -> List[str]:
    """找出 root 底下所有含 manifest.json 的目錄（排序以保持合併結果穩定）"""
    return sorted(str(p.parent) for p in Path(root).rglob(MANIFEST_FILE))


def merge_report_dirs(report_dirs: List[str], target_dir: str) -> int:
    """
    合併來源報告目錄到目標目錄

    Args:
        report_dirs: 各 cell 的報告目錄
        target_dir: 合併後報告的輸出目錄

    Returns:
        int: 合併後的 cell 數
    """
    reports = []
    for report_dir in report_dirs:
        print(f"合併 {report_dir}...")
        reports.append(load_report(report_dir))
    merged = merge_reports(reports)
    emit_report(merged, target_dir)

    # 散佈圖不經過報告檔，直接複製
    for report_dir in report_dirs:
        for svg in sorted(Path(report_dir).glob("scatter_*.svg")):
            shutil.copyfile(svg, os.path.join(target_dir, svg.name))
    print(f"✓ 合併完成，目標目錄: {target_dir}")
    return len(merged.cells)


def main() -> int:
    """主程式"""
    configure_logging()
    suite = os.getenv("SUITE_NAME", "lowdim")
    artifacts_dir = Path(sys.argv[1] if len(sys.argv) > 1 else "artifacts")
    if not artifacts_dir.exists():
        print(f"錯誤: {artifacts_dir} 目錄不存在")
        return 1

    report_dirs = find_report_dirs(str(artifacts_dir))
    if not report_dirs:
        print("錯誤: 未找到任何部分報告")
        return 1

    print(f"找到 {len(report_dirs)} 個部分報告:")
    for report_dir in report_dirs:
        print(f"  - {report_dir}")

    target_dir = os.path.join(env_out_dir(), suite)
    try:
        count = merge_report_dirs(report_dirs, target_dir)
    except MseEigError as e:
        print(f"錯誤: {e}")
        return e.exit_code
    print(f"✓ 合併後共有 {count} 個 cell")
    return 0


if __name__ == "__main__":
    sys.exit(main())
