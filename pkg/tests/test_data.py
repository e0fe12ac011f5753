#!/usr/bin/env python3
"""
測試資料集模組：產生器、正規化、HLP 標記、CSV 讀寫與 manifest
"""

import json
import os
import shutil
import tempfile
import unittest

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

from src.errors import (
    ConfigError,
    CsvParseError,
    DataError,
    DegenerateColumnError,
    NotPositiveDefiniteError,
)
from src.data import (
    Dataset,
    MANIFOLD_COLUMNS,
    apply_normalization,
    denormalize,
    gen_gaussian,
    gen_highdim_gaussian,
    gen_manifold3d,
    gen_noisy_gaussian,
    label_hlp,
    load_csv,
    lowdim_family,
    manifest_path_for,
    normalize_minmax,
    save_csv,
    top_k_flags,
    write_generator_manifest,
)


class TestGaussianGenerators(unittest.TestCase):
    def test_sample_covariance_close(self):
        """n = 10⁵、diag(4,1) → 樣本共變異在 0.05 以內"""
        ds = gen_gaussian(100000, [0.0, 0.0], np.diag([4.0, 1.0]), seed=0)
        cov = np.cov(ds.samples, rowvar=False, bias=True)
        assert_allclose(cov, np.diag([4.0, 1.0]), atol=0.05)

    def test_identity_nearly_uncorrelated(self):
        ds = gen_gaussian(100000, [0.0, 0.0], np.eye(2), seed=1)
        corr = np.corrcoef(ds.samples, rowvar=False)[0, 1]
        self.assertLess(abs(corr), 0.02)

    def test_same_seed_identical(self):
        a = gen_gaussian(50, [1.0, 2.0], np.eye(2), seed=7)
        b = gen_gaussian(50, [1.0, 2.0], np.eye(2), seed=7)
        assert_array_equal(a.samples, b.samples)

    def test_different_seed_differs(self):
        a = gen_gaussian(50, [0.0, 0.0], np.eye(2), seed=7)
        b = gen_gaussian(50, [0.0, 0.0], np.eye(2), seed=8)
        self.assertFalse(np.array_equal(a.samples, b.samples))

    def test_not_positive_definite(self):
        with self.assertRaises(NotPositiveDefiniteError):
            gen_gaussian(10, [0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]], seed=0)

    def test_negative_seed_rejected(self):
        with self.assertRaises(ConfigError):
            gen_gaussian(10, [0.0], [[1.0]], seed=-1)

    def test_provenance(self):
        ds = gen_gaussian(5, [0.0, 0.0], np.eye(2), seed=3)
        self.assertEqual(ds.provenance["generator"], "gaussian")
        self.assertEqual(ds.provenance["seed"], 3)
        self.assertEqual(ds.column_names, ["c1", "c2"])


class TestNoisyGaussian(unittest.TestCase):
    def test_zero_fraction_equals_gaussian(self):
        clean = gen_gaussian(200, [0.0, 0.0], np.eye(2), seed=4)
        noisy = gen_noisy_gaussian(200, [0.0, 0.0], np.eye(2), 0.0, 4.0, seed=4)
        assert_array_equal(clean.samples, noisy.samples)

    def test_replaced_row_count(self):
        """n = 1000、比例 0.03 → 恰好 30 列被替換"""
        clean = gen_gaussian(1000, [0.0, 0.0], np.eye(2), seed=5)
        noisy = gen_noisy_gaussian(1000, [0.0, 0.0], np.eye(2), 0.03, 4.0, seed=5)
        changed = np.any(clean.samples != noisy.samples, axis=1)
        self.assertEqual(int(changed.sum()), 30)
        self.assertEqual(len(noisy.provenance["params"]["replaced_rows"]), 30)
        self.assertTrue(np.all(np.abs(noisy.samples[changed]) <= 4.0))

    def test_fraction_out_of_range(self):
        with self.assertRaises(ConfigError):
            gen_noisy_gaussian(100, [0.0], [[1.0]], 0.3, 1.0, seed=0)

    def test_lowdim_families(self):
        for name in ("dataset1", "dataset2", "dataset3"):
            with self.subTest(family=name):
                ds = lowdim_family(name, 300, seed=2)
                self.assertEqual(ds.samples.shape, (300, 2))
                self.assertEqual(ds.provenance["family"], name)
        with self.assertRaises(ConfigError):
            lowdim_family("dataset9", 10, seed=0)


class TestManifold(unittest.TestCase):
    def setUp(self):
        self.train, self.test = gen_manifold3d(1000, 800, 0.05, seed=3)

    def test_shapes_and_columns(self):
        self.assertEqual(self.train.samples.shape, (1000, 3))
        self.assertEqual(self.test.samples.shape, (800, 3))
        self.assertEqual(self.train.column_names, MANIFOLD_COLUMNS)
        self.assertIsNone(self.train.labels)

    def test_training_rows_on_manifold(self):
        p1, p2 = self.train.samples[:, 0], self.train.samples[:, 1]
        assert_array_equal(p2, p1 * p1)

    def test_unlabeled_test_rows_on_manifold(self):
        keep = self.test.labels == 0
        p1, p2 = self.test.samples[keep, 0], self.test.samples[keep, 1]
        assert_array_equal(p2, p1 * p1)

    def test_ip_rows_off_manifold(self):
        """⌊0.05·800⌋ = 40 個 IP，偏移至少 3σ"""
        flagged = self.test.labels == 1
        self.assertEqual(int(flagged.sum()), 40)
        p1, p2 = self.test.samples[flagged, 0], self.test.samples[flagged, 1]
        clean = self.test.samples[~flagged, 1]
        # σ 以加入偏移前的 parameter2 計算；用乾淨列估計並留一點餘裕
        sigma = float(np.std(clean))
        self.assertTrue(np.all(np.abs(p2 - p1 * p1) >= 3.0 * sigma * 0.9))

    def test_ratio_out_of_range(self):
        with self.assertRaises(ConfigError):
            gen_manifold3d(100, 100, 0.5, seed=0)


class TestHighdim(unittest.TestCase):
    def test_shape_and_diagonal(self):
        ds = gen_highdim_gaussian(4000, 50, seed=0)
        self.assertEqual(ds.samples.shape, (4000, 50))
        variances = np.array(ds.provenance["params"]["variances"])
        self.assertTrue(np.all((variances >= 0.25) & (variances <= 4.0)))
        cov = np.cov(ds.samples, rowvar=False, bias=True)
        off = cov - np.diag(np.diag(cov))
        self.assertLess(np.max(np.abs(off)), 0.4)

    def test_too_few_columns(self):
        with self.assertRaises(ConfigError):
            gen_highdim_gaussian(100, 1, seed=0)


class TestNormalization(unittest.TestCase):
    def test_hand_example(self):
        """(2, 4, 6) → (0, 0.5, 1)"""
        ds = Dataset(np.array([[2.0], [4.0], [6.0]]), ["x"])
        out = normalize_minmax(ds)
        assert_allclose(out.samples[:, 0], [0.0, 0.5, 1.0])
        self.assertTrue(out.normalized)
        assert_array_equal(out.norm_params.mins, [2.0])
        assert_array_equal(out.norm_params.maxs, [6.0])

    def test_constant_column_named(self):
        ds = Dataset(np.array([[1.0, 5.0], [2.0, 5.0]]), ["a", "b"])
        with self.assertRaises(DegenerateColumnError) as ctx:
            normalize_minmax(ds)
        self.assertEqual(ctx.exception.column, "b")

    def test_idempotent(self):
        ds = gen_gaussian(100, [0.0, 0.0], np.eye(2), seed=9)
        once = normalize_minmax(ds)
        twice = normalize_minmax(once)
        assert_allclose(twice.samples, once.samples, atol=1e-15)

    def test_denormalize_restores(self):
        ds = gen_gaussian(100, [3.0, -1.0], np.diag([2.0, 0.5]), seed=10)
        back = denormalize(normalize_minmax(normalize_minmax(ds)))
        assert_allclose(back.samples, ds.samples, rtol=1e-12, atol=1e-12)
        self.assertFalse(back.normalized)

    def test_apply_normalization_matches(self):
        ds = gen_gaussian(60, [0.0, 0.0], np.eye(2), seed=11)
        norm = normalize_minmax(ds)
        assert_allclose(apply_normalization(ds.samples, norm.norm_params), norm.samples)

    def test_normalized_range_enforced(self):
        norm = normalize_minmax(Dataset(np.array([[0.0], [1.0]]), ["x"]))
        with self.assertRaises(DataError):
            Dataset(np.array([[1.5]]), ["x"], normalized=True, norm_params=norm.norm_params)


class TestLabelHlp(unittest.TestCase):
    def test_count(self):
        """n = 100、δ = 0.05 → 5 個 HLP"""
        ds = gen_gaussian(100, [0.0, 0.0], np.eye(2), seed=12)
        labeled = label_hlp(ds, 0.05)
        self.assertEqual(int(labeled.labels.sum()), 5)

    def test_flags_farthest_points(self):
        ds = gen_gaussian(200, [0.0, 0.0], np.diag([4.0, 1.0]), seed=13)
        labeled = label_hlp(ds, 0.1)
        d = ds.samples
        cov_inv = np.linalg.inv(np.cov(d, rowvar=False, bias=True))
        centered = d - d.mean(axis=0)
        dist = np.einsum("ij,jk,ik->i", centered, cov_inv, centered)
        expected = np.zeros(200, dtype=int)
        expected[np.argsort(-dist, kind="stable")[:20]] = 1
        assert_array_equal(labeled.labels, expected)

    def test_ties_broken_by_index(self):
        assert_array_equal(top_k_flags([1.0, 3.0, 3.0, 3.0, 0.0], 2), [0, 1, 1, 0, 0])

    def test_ratio_out_of_range(self):
        ds = gen_gaussian(20, [0.0], [[1.0]], seed=0)
        for ratio in (0.0, 0.5):
            with self.assertRaises(ConfigError):
                label_hlp(ds, ratio)

    def test_feature_subset(self):
        ds = gen_gaussian(100, [0.0, 0.0, 0.0], np.eye(3), seed=14)
        labeled = label_hlp(ds, 0.05, feature_subset=[0, 2])
        self.assertEqual(int(labeled.labels.sum()), 5)
        with self.assertRaises(ConfigError):
            label_hlp(ds, 0.05, feature_subset=[0, 3])


class TestCsv(unittest.TestCase):
    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        if os.path.exists(self.temp_dir):
            shutil.rmtree(self.temp_dir)

    def _write(self, name, text):
        path = os.path.join(self.temp_dir, name)
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        return path

    def test_round_trip_exact(self):
        ds = label_hlp(gen_gaussian(30, [0.0, 0.0], np.eye(2), seed=15), 0.1)
        path = os.path.join(self.temp_dir, "data.csv")
        save_csv(ds, path)
        loaded = load_csv(path)
        assert_array_equal(loaded.samples, ds.samples)
        assert_array_equal(loaded.labels, ds.labels)
        self.assertEqual(loaded.column_names, ds.column_names)

    def test_line_endings_are_lf(self):
        ds = gen_gaussian(3, [0.0], [[1.0]], seed=0)
        path = os.path.join(self.temp_dir, "data.csv")
        save_csv(ds, path)
        with open(path, "rb") as f:
            self.assertNotIn(b"\r\n", f.read())

    def test_without_label_column(self):
        path = self._write("plain.csv", "a,b\n1,2\n3,4\n")
        ds = load_csv(path)
        self.assertIsNone(ds.labels)
        assert_array_equal(ds.samples, [[1.0, 2.0], [3.0, 4.0]])

    def test_ragged_row_reports_line(self):
        path = self._write("bad.csv", "a,b\n1,2\n3\n")
        with self.assertRaises(CsvParseError) as ctx:
            load_csv(path)
        self.assertEqual(ctx.exception.line, 3)

    def test_non_numeric_reports_line(self):
        path = self._write("bad.csv", "a,b\n1,2\n3,4\nx,5\n")
        with self.assertRaises(CsvParseError) as ctx:
            load_csv(path)
        self.assertEqual(ctx.exception.line, 4)

    def test_bad_label(self):
        path = self._write("bad.csv", "a,label\n1,0\n2,2\n")
        with self.assertRaises(CsvParseError) as ctx:
            load_csv(path)
        self.assertEqual(ctx.exception.line, 3)

    def test_non_finite(self):
        path = self._write("bad.csv", "a\nnan\n")
        with self.assertRaises(CsvParseError):
            load_csv(path)

    def test_empty_file(self):
        path = self._write("empty.csv", "")
        with self.assertRaises(CsvParseError):
            load_csv(path)

    def test_label_not_last(self):
        path = self._write("bad.csv", "label,a\n0,1\n")
        with self.assertRaises(CsvParseError) as ctx:
            load_csv(path)
        self.assertEqual(ctx.exception.line, 1)

    def test_duplicate_header(self):
        path = self._write("bad.csv", "a,a\n1,2\n")
        with self.assertRaises(CsvParseError):
            load_csv(path)

    def test_generator_manifest(self):
        ds = lowdim_family("dataset3", 50, seed=6)
        path = os.path.join(self.temp_dir, "d3.csv")
        save_csv(ds, path)
        manifest = write_generator_manifest(ds, path)
        self.assertEqual(manifest, manifest_path_for(path))
        self.assertTrue(manifest.endswith("d3.manifest.json"))
        with open(manifest, "r", encoding="utf-8") as f:
            doc = json.load(f)
        self.assertEqual(doc["generator"], "noisy_gaussian")
        self.assertEqual(doc["seed"], 6)
        self.assertEqual(doc["family"], "dataset3")
        self.assertEqual(doc["params"]["noise_fraction"], 0.01)


if __name__ == "__main__":
    unittest.main()
