#!/usr/bin/env python3
"""
執行單一實驗 cell（資料集 × seed）
用於 Matrix Strategy 並行處理；結果由 merge_reports.py 合併
"""

import os
import sys

from dotenv import load_dotenv

from src.config import configure_logging, env_out_dir, suite_config
from src.errors import ConfigError, MseEigError
from src.evaluation import assemble_report, cell_for_index, emit_report, plan_cells, run_cell

# 載入 .env 檔案
load_dotenv()


def main() -> int:
    """主程式：處理單一 cell"""
    # 從環境變數獲取要處理的 suite 與 cell index
    suite = os.getenv("SUITE_NAME", "lowdim")
    raw_index = os.getenv("CELL_INDEX", "0")

    try:
        configure_logging()
        try:
            cell_index = int(raw_index)
        except ValueError as e:
            raise ConfigError(f"CELL_INDEX must be an integer, got {raw_index!r}") from e
        config = suite_config(suite)
        total = len(plan_cells(config))
        if cell_index >= total:
            print(f"Cell index {cell_index} out of range (total: {total})")
            return 0
        cell = cell_for_index(config, cell_index)

        print(f"\n{'=' * 60}")
        print(f"Processing: {cell.cell_id} (Index: {cell_index}/{total})")
        print(f"{'=' * 60}\n")

        result = run_cell(config, cell)
        report = assemble_report(config, [result])
        out_dir = os.path.join(env_out_dir(), "cells", suite, cell.cell_id)
        emit_report(report, out_dir)
    except MseEigError as e:
        print(f"Error processing cell {raw_index} of {suite}: {e}")
        return e.exit_code

    print(f"beta={result.info['beta']:.6g}, {len(result.entries)} AUC values")
    print(f"\nDone processing {cell.cell_id}! Partial report: {out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
