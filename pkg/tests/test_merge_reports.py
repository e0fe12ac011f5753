#!/usr/bin/env python3
"""
測試 run_cell / merge_reports：分散執行各 cell 後合併成一份報告
"""

import io
import json
import os
import shutil
import tempfile
import unittest
from unittest.mock import patch

import merge_reports
import run_cell
from merge_reports import find_report_dirs, merge_report_dirs
from src.config import SuiteConfig
from src.evaluation import AucEntry, ExperimentReport, emit_report, load_report


def _partial(config, dataset, seed, value):
    entries = [
        AucEntry("lowdim", dataset, 0.05, method, value, seed) for method in ("mse", "mse_eig")
    ]
    cells = [{"cell_id": f"lowdim-{dataset}-s{seed}", "dataset": dataset, "seed": seed, "wall_time": 1.0}]
    return ExperimentReport(suite="lowdim", config=config, seed_entries=entries, cells=cells)


class TestMergeReportDirs(unittest.TestCase):
    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.config = SuiteConfig(suite="lowdim", datasets=["dataset1"], seeds=[0, 1], ratios=[0.05])

    def tearDown(self):
        if os.path.exists(self.temp_dir):
            shutil.rmtree(self.temp_dir)

    def _emit(self, name, report):
        path = os.path.join(self.temp_dir, "artifacts", name)
        emit_report(report, path)
        return path

    @patch("sys.stdout", new_callable=io.StringIO)
    def test_merge_two_cells(self, mock_stdout):
        self._emit("cell-b", _partial(self.config, "dataset1", 1, 0.75))
        self._emit("cell-a", _partial(self.config, "dataset1", 0, 0.25))
        dirs = find_report_dirs(os.path.join(self.temp_dir, "artifacts"))
        self.assertEqual([os.path.basename(d) for d in dirs], ["cell-a", "cell-b"])

        target = os.path.join(self.temp_dir, "merged")
        count = merge_report_dirs(dirs, target)
        self.assertEqual(count, 2)
        merged = load_report(target)
        self.assertEqual(len(merged.seed_entries), 4)
        self.assertEqual([e.auc for e in merged.entries], [0.5, 0.5])
        self.assertIn("合併完成", mock_stdout.getvalue())

    @patch("sys.stdout", new_callable=io.StringIO)
    def test_duplicate_cell_first_wins(self, mock_stdout):
        first = self._emit("a", _partial(self.config, "dataset1", 0, 0.25))
        second = self._emit("b", _partial(self.config, "dataset1", 0, 0.9))
        target = os.path.join(self.temp_dir, "merged")
        self.assertEqual(merge_report_dirs([first, second], target), 1)
        self.assertEqual({e.auc for e in load_report(target).seed_entries}, {0.25})

    @patch("sys.stdout", new_callable=io.StringIO)
    def test_main_missing_artifacts(self, mock_stdout):
        with patch("sys.argv", ["merge_reports.py", os.path.join(self.temp_dir, "none")]):
            self.assertEqual(merge_reports.main(), 1)
        self.assertIn("不存在", mock_stdout.getvalue())

    @patch("sys.stdout", new_callable=io.StringIO)
    def test_main_no_reports(self, mock_stdout):
        os.makedirs(os.path.join(self.temp_dir, "empty"))
        with patch("sys.argv", ["merge_reports.py", os.path.join(self.temp_dir, "empty")]):
            self.assertEqual(merge_reports.main(), 1)


class TestRunCellThenMerge(unittest.TestCase):
    """以小規模設定模擬 matrix：每個 cell 一個 job，最後合併"""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.config_path = os.path.join(self.temp_dir, "experiments.json")
        with open(self.config_path, "w", encoding="utf-8") as f:
            json.dump({
                "lowdim": {"datasets": ["dataset1"], "seeds": [0, 1], "n_train": 150,
                           "epochs": 5, "ratios": [0.05]},
            }, f)
        self.env = {
            "MSE_EIG_CONFIG": self.config_path,
            "MSE_EIG_OUT_DIR": self.temp_dir,
            "SUITE_NAME": "lowdim",
        }

    def tearDown(self):
        if os.path.exists(self.temp_dir):
            shutil.rmtree(self.temp_dir)

    @patch("sys.stdout", new_callable=io.StringIO)
    def test_cells_then_merge(self, mock_stdout):
        for index in ("0", "1"):
            with patch.dict(os.environ, {**self.env, "CELL_INDEX": index}):
                self.assertEqual(run_cell.main(), 0)
        cells_root = os.path.join(self.temp_dir, "cells")
        self.assertEqual(len(find_report_dirs(cells_root)), 2)

        with patch.dict(os.environ, self.env), patch("sys.argv", ["merge_reports.py", cells_root]):
            self.assertEqual(merge_reports.main(), 0)
        merged = load_report(os.path.join(self.temp_dir, "lowdim"))
        self.assertEqual([c["seed"] for c in merged.cells], [0, 1])
        self.assertTrue(os.path.exists(os.path.join(self.temp_dir, "lowdim", "scatter_lowdim_dataset1.svg")))

    @patch("sys.stdout", new_callable=io.StringIO)
    def test_index_out_of_range_is_noop(self, mock_stdout):
        with patch.dict(os.environ, {**self.env, "CELL_INDEX": "9"}):
            self.assertEqual(run_cell.main(), 0)
        self.assertIn("out of range", mock_stdout.getvalue())
        self.assertFalse(os.path.exists(os.path.join(self.temp_dir, "cells")))

    @patch("sys.stdout", new_callable=io.StringIO)
    def test_non_integer_index_is_config_error(self, mock_stdout):
        with patch.dict(os.environ, {**self.env, "CELL_INDEX": "abc"}):
            self.assertEqual(run_cell.main(), 2)
        self.assertIn("CELL_INDEX must be an integer", mock_stdout.getvalue())
        self.assertFalse(os.path.exists(os.path.join(self.temp_dir, "cells")))


if __name__ == "__main__":
    unittest.main()
