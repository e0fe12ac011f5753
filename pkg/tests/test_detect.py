#!/usr/bin/env python3
"""
測試離群點偵測：訓練流程、評分、標記、方向統計與模型 / CSV 檔
"""

import os
import shutil
import tempfile
import unittest

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

from src.data import Dataset, NormParams, gen_gaussian, normalize_minmax
from src.detect import (
    LossRecord,
    TrainConfig,
    TrainedModel,
    _batches,
    direction_split,
    directional_stats,
    directional_stats_from,
    error_growth_fit,
    flag_outliers,
    gap_deviation,
    load_model,
    read_loss_history_csv,
    read_scores_csv,
    reconstruction_curves,
    reconstruction_scores,
    save_model,
    score,
    train,
    write_loss_history_csv,
    write_scores_csv,
)
from src.errors import (
    BatchTooSmallError,
    ConfigError,
    DataError,
    DegenerateInputError,
    ShapeMismatchError,
)
from src.loss import build_loss_config
from src.network import AutoencoderConfig, NetworkParams


def _stub_model():
    """1-1-1 網路，權重 1、偏差 0，正規化為恆等"""
    params = NetworkParams(np.array([[1.0]]), np.zeros(1), np.array([[1.0]]), np.zeros(1))
    return TrainedModel(
        params=params,
        config=AutoencoderConfig(1, 1),
        norm_params=NormParams(np.array([0.0]), np.array([1.0])),
        loss_history=[LossRecord(0, 0.0, 0.0, 0.0)],
    )


def _training_set(n=200, seed=0):
    return normalize_minmax(gen_gaussian(n, [0.0, 0.0], np.diag([1.0, 0.25]), seed=seed))


class TestScoring(unittest.TestCase):
    def test_stub_model_score(self):
        """輸入 0.5 → 輸出 sigmoid(0.5)，誤差平方 ≈ 0.01500"""
        scores = score(_stub_model(), np.array([[0.5]]))
        self.assertAlmostEqual(float(scores[0]), 0.01500, places=5)

    def test_reconstruction_scores(self):
        assert_allclose(reconstruction_scores([[1.0, 2.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]), [5.0, 0.0])

    def test_shape_mismatch(self):
        with self.assertRaises(ShapeMismatchError):
            reconstruction_scores(np.zeros((2, 2)), np.zeros((2, 3)))
        with self.assertRaises(ShapeMismatchError):
            score(_stub_model(), Dataset(np.zeros((3, 2)), ["a", "b"]))

    def test_raw_dataset_uses_model_normalization(self):
        model = _stub_model()
        model.norm_params = NormParams(np.array([10.0]), np.array([12.0]))
        raw = Dataset(np.array([[11.0]]), ["x"])
        assert_allclose(model.normalized_inputs(raw), [[0.5]])

    def test_normalized_dataset_with_other_params(self):
        """以別組 min/max 正規化的資料會先還原再套用模型的 min/max"""
        model = _stub_model()
        model.norm_params = NormParams(np.array([0.0]), np.array([4.0]))
        other = normalize_minmax(Dataset(np.array([[1.0], [3.0], [2.0]]), ["x"]))
        assert_allclose(model.normalized_inputs(other), [[0.25], [0.75], [0.5]])


class TestFlagOutliers(unittest.TestCase):
    def test_count(self):
        """n = 1000、δ = 0.05 → 50 個"""
        scores = np.random.default_rng(0).random(1000)
        flags = flag_outliers(scores, 0.05)
        self.assertEqual(int(flags.sum()), 50)
        self.assertGreaterEqual(scores[flags == 1].min(), scores[flags == 0].max())

    def test_ties_lower_index_first(self):
        assert_array_equal(flag_outliers([1.0, 1.0, 1.0, 0.0], 0.5), [1, 1, 0, 0])

    def test_delta_out_of_range(self):
        for delta in (0.0, 1.0, -0.1):
            with self.assertRaises(ConfigError):
                flag_outliers([1.0, 2.0], delta)


class TestBatches(unittest.TestCase):
    def test_short_tail_merged(self):
        chunks = _batches(np.arange(10), 4, 3)
        self.assertEqual([len(c) for c in chunks], [4, 6])
        assert_array_equal(np.concatenate(chunks), np.arange(10))

    def test_tail_kept_when_large_enough(self):
        self.assertEqual([len(c) for c in _batches(np.arange(10), 4, 1)], [4, 4, 2])

    def test_single_batch(self):
        self.assertEqual(len(_batches(np.arange(5), 5, 3)), 1)


class TestTrainConfig(unittest.TestCase):
    def test_zero_epochs_rejected(self):
        with self.assertRaises(ConfigError):
            TrainConfig(epochs=0)

    def test_bad_learning_rate(self):
        with self.assertRaises(ConfigError):
            TrainConfig(learning_rate=0.0)

    def test_bad_batch_size(self):
        with self.assertRaises(ConfigError):
            TrainConfig(batch_size="half")

    def test_resolve_batch_size(self):
        self.assertEqual(TrainConfig().resolve_batch_size(4096), 4096)
        self.assertEqual(TrainConfig().resolve_batch_size(4097), 512)
        self.assertEqual(TrainConfig(batch_size="full").resolve_batch_size(9000), 9000)
        self.assertEqual(TrainConfig(batch_size=64).resolve_batch_size(10), 10)

    def test_bad_init(self):
        with self.assertRaises(ConfigError):
            TrainConfig(init="xavier")

    def test_negative_warmup(self):
        with self.assertRaises(ConfigError):
            TrainConfig(warmup_epochs=-1)

    def test_resolve_init(self):
        self.assertEqual(TrainConfig().resolve_init(AutoencoderConfig(2, 2)), "principal")
        self.assertEqual(TrainConfig().resolve_init(AutoencoderConfig(3, 2)), "glorot")
        self.assertEqual(TrainConfig(init="glorot").resolve_init(AutoencoderConfig(2, 2)), "glorot")
        self.assertEqual(TrainConfig(init="principal").resolve_init(AutoencoderConfig(3, 2)), "principal")

    def test_resolve_warmup(self):
        loss_cfg = build_loss_config(_training_set().samples, 2, "auto")
        self.assertEqual(TrainConfig(epochs=40).resolve_warmup("glorot"), 0)
        self.assertEqual(TrainConfig(epochs=40, loss=loss_cfg).resolve_warmup("glorot"), 40)
        self.assertEqual(TrainConfig(epochs=40, loss=loss_cfg).resolve_warmup("principal"), 0)
        self.assertEqual(
            TrainConfig(epochs=40, loss=loss_cfg, warmup_epochs=7).resolve_warmup("principal"), 7
        )


class TestTrain(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.ds = _training_set()
        cls.net_cfg = AutoencoderConfig(2, 2, seed=3)
        cls.loss_cfg = build_loss_config(cls.ds.samples, 2, "auto")
        cls.mse_model = train(cls.ds, cls.net_cfg, TrainConfig(epochs=150, learning_rate=1e-2, seed=1))
        cls.eig_model = train(
            cls.ds, cls.net_cfg,
            TrainConfig(epochs=150, learning_rate=1e-2, loss=cls.loss_cfg, seed=1, record_every=50),
        )

    def test_mse_loss_decreases(self):
        history = self.mse_model.loss_history
        self.assertLess(history[-1].total, history[0].total)
        self.assertEqual(history[-1].eig_part, 0.0)

    def test_mse_eig_loss_decreases(self):
        history = self.eig_model.loss_history
        self.assertLess(history[-1].total, history[0].total)

    def test_history_epochs(self):
        self.assertEqual([r.epoch for r in self.eig_model.loss_history], [0, 50, 100, 150])

    def test_final_epoch_recorded(self):
        model = train(self.ds, self.net_cfg, TrainConfig(epochs=5, record_every=2, learning_rate=1e-2))
        self.assertEqual([r.epoch for r in model.loss_history], [0, 2, 4, 5])

    def test_metadata(self):
        meta = self.eig_model.metadata
        self.assertEqual(meta["loss"], "mse-eig")
        self.assertEqual(meta["theta1"], 0.008)
        self.assertEqual(meta["theta2"], 1.0)
        self.assertEqual(meta["learning_rate"], 1e-2)
        self.assertEqual(meta["beta"], self.loss_cfg.beta)
        self.assertEqual(meta["n_train"], 200)
        self.assertIsNone(self.mse_model.metadata["beta"])

    def test_full_width_uses_principal_init(self):
        meta = self.eig_model.metadata
        self.assertEqual(meta["init"], "principal")
        self.assertIsNone(meta["init_seed"])
        self.assertEqual(meta["warmup_epochs"], 0)
        self.assertEqual(meta["revived_units"], 0)

    def test_mse_eig_keeps_directions_oriented(self):
        """收縮後每個主方向的重建仍與輸入同向、高度相關"""
        stats = directional_stats(self.eig_model, self.ds)
        self.assertTrue(np.all(stats.slope > 0.0), stats.slope)
        self.assertTrue(np.all(stats.rho > 0.9), stats.rho)
        self.assertTrue(np.all(stats.lam_hat < stats.lam))

    def test_narrow_network_warms_up_with_mse(self):
        loss_cfg = build_loss_config(self.ds.samples, 1, "auto")
        model = train(
            self.ds, AutoencoderConfig(2, 1, seed=3),
            TrainConfig(epochs=6, learning_rate=1e-2, loss=loss_cfg, record_every=3),
        )
        meta = model.metadata
        self.assertEqual(meta["init"], "glorot")
        self.assertEqual(meta["init_seed"], 3)
        self.assertEqual(meta["warmup_epochs"], 6)
        self.assertEqual([r.epoch for r in model.loss_history], [0, 3, 6])

    def test_explicit_warmup(self):
        model = train(
            self.ds, self.net_cfg,
            TrainConfig(epochs=4, learning_rate=1e-2, loss=self.loss_cfg, warmup_epochs=2),
        )
        self.assertEqual(model.metadata["warmup_epochs"], 2)
        self.assertEqual(model.metadata["init"], "principal")

    def test_deterministic(self):
        again = train(self.ds, self.net_cfg, TrainConfig(epochs=150, learning_rate=1e-2, seed=1))
        for a, b in zip(self.mse_model.params.arrays(), again.params.arrays()):
            assert_array_equal(a, b)

    def test_unnormalized_rejected(self):
        raw = gen_gaussian(50, [0.0, 0.0], np.eye(2), seed=0)
        with self.assertRaises(ConfigError):
            train(raw, self.net_cfg, TrainConfig(epochs=1))

    def test_dimension_mismatch(self):
        with self.assertRaises(ShapeMismatchError):
            train(self.ds, AutoencoderConfig(3, 2), TrainConfig(epochs=1))

    def test_intrinsic_dim_must_match_hidden(self):
        loss_cfg = build_loss_config(self.ds.samples, 1, "auto")
        with self.assertRaises(ConfigError):
            train(self.ds, self.net_cfg, TrainConfig(epochs=1, loss=loss_cfg))

    def test_batch_too_small_for_eig_term(self):
        with self.assertRaises(BatchTooSmallError):
            train(self.ds, self.net_cfg, TrainConfig(epochs=1, batch_size=2, loss=self.loss_cfg))

    def test_mini_batches(self):
        model = train(
            self.ds, self.net_cfg,
            TrainConfig(epochs=3, batch_size=64, learning_rate=1e-2, loss=self.loss_cfg),
        )
        self.assertEqual(model.metadata["batch_size"], 64)
        self.assertTrue(model.params.is_finite())


class TestDirectionalStats(unittest.TestCase):
    def setUp(self):
        rng = np.random.default_rng(5)
        self.x = rng.normal(size=(300, 3)) * np.array([2.0, 1.0, 0.5])

    def test_identity_reconstruction(self):
        stats = directional_stats_from(self.x, self.x.copy(), 2)
        assert_allclose(stats.lam_hat, stats.lam)
        assert_allclose(stats.nu_hat, stats.nu)
        assert_allclose(stats.rho, [1.0, 1.0])
        assert_allclose(stats.slope, [1.0, 1.0])
        assert_allclose(gap_deviation(stats, 0.0), [0.0, 0.0], atol=1e-12)

    def test_mean_reconstruction(self):
        """輸出恆為平均 → λ̂ = 0，相關係數記為 0"""
        mean_rows = np.tile(self.x.mean(axis=0), (300, 1))
        stats = directional_stats_from(self.x, mean_rows, 3)
        assert_allclose(stats.lam_hat, np.zeros(3), atol=1e-20)
        assert_array_equal(stats.rho, np.zeros(3))
        assert_allclose(stats.slope, np.zeros(3), atol=1e-12)
        assert_allclose(gap_deviation(stats, 0.0), np.sqrt(stats.lam))

    def test_scaled_reconstruction(self):
        """Ŷ = ν + 0.5 (Y - ν) → 斜率 0.5、λ̂ = λ/4"""
        mean = self.x.mean(axis=0)
        stats = directional_stats_from(self.x, mean + 0.5 * (self.x - mean), 3)
        assert_allclose(stats.slope, [0.5, 0.5, 0.5])
        assert_allclose(stats.lam_hat, stats.lam / 4.0)

    def test_rows(self):
        rows = directional_stats_from(self.x, self.x, 2).to_rows()
        self.assertEqual([r["direction"] for r in rows], [1, 2])
        self.assertIn("lambda_hat", rows[0])

    def test_directions_out_of_range(self):
        with self.assertRaises(ConfigError):
            directional_stats_from(self.x, self.x, 4)

    def test_needs_enough_rows(self):
        with self.assertRaises(DegenerateInputError):
            directional_stats(_stub_model(), np.random.default_rng(0).random((5, 1)))


class TestModelDiagnostics(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.ds = _training_set(n=300, seed=2)
        loss_cfg = build_loss_config(cls.ds.samples, 2, "auto")
        cls.model = train(
            cls.ds, AutoencoderConfig(2, 2, seed=0),
            TrainConfig(epochs=100, learning_rate=1e-2, loss=loss_cfg),
        )

    def test_direction_split_sums_to_one(self):
        split = direction_split(self.model, self.ds, score(self.model, self.ds), 0.05)
        self.assertEqual(split.shape, (2,))
        self.assertAlmostEqual(float(split.sum()), 1.0)

    def test_direction_split_needs_flags(self):
        with self.assertRaises(ConfigError):
            direction_split(self.model, self.ds, score(self.model, self.ds), 0.001)

    def test_error_growth_fit_rows(self):
        rows = error_growth_fit(self.model, self.ds)
        self.assertEqual([r["direction"] for r in rows], [1, 2])
        for r in rows:
            self.assertGreaterEqual(r["slope"], 0.0)
            self.assertLessEqual(r["r2"], 1.0)

    def test_reconstruction_curves(self):
        curves = reconstruction_curves(self.model, self.ds, bins=4)
        self.assertEqual(len(curves), 2)
        for curve in curves:
            self.assertEqual(int(curve.counts.sum()), 300)
            self.assertTrue(np.all(curve.mean_output > 0.0) and np.all(curve.mean_output < 1.0))

    def test_reconstruction_curves_bad_bins(self):
        with self.assertRaises(ConfigError):
            reconstruction_curves(self.model, self.ds, bins=0)

    def test_directional_stats_on_model(self):
        stats = directional_stats(self.model, self.ds)
        self.assertEqual(stats.directions, 2)
        self.assertTrue(np.all(stats.lam_hat >= 0.0))


class TestFiles(unittest.TestCase):
    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        if os.path.exists(self.temp_dir):
            shutil.rmtree(self.temp_dir)

    def test_model_round_trip(self):
        ds = _training_set(n=60)
        loss_cfg = build_loss_config(ds.samples, 2, 0.05)
        model = train(ds, AutoencoderConfig(2, 2, seed=4), TrainConfig(epochs=3, loss=loss_cfg))
        path = os.path.join(self.temp_dir, "model.json")
        save_model(model, path)
        loaded = load_model(path)
        for a, b in zip(model.params.arrays(), loaded.params.arrays()):
            assert_array_equal(a, b)
        self.assertEqual(loaded.loss_history, model.loss_history)
        self.assertEqual(loaded.loss_config, model.loss_config)
        self.assertEqual(loaded.metadata, model.metadata)
        assert_array_equal(score(loaded, ds), score(model, ds))

    def test_scores_csv(self):
        path = os.path.join(self.temp_dir, "scores.csv")
        write_scores_csv(path, [0.5, 0.25, 1e-9], [1, 0, 0])
        scores, labels = read_scores_csv(path)
        assert_array_equal(scores, [0.5, 0.25, 1e-9])
        assert_array_equal(labels, [1, 0, 0])

    def test_scores_csv_without_labels(self):
        path = os.path.join(self.temp_dir, "scores.csv")
        write_scores_csv(path, [0.1, 0.2])
        _, labels = read_scores_csv(path)
        self.assertIsNone(labels)

    def test_scores_csv_missing_column(self):
        path = os.path.join(self.temp_dir, "bad.csv")
        with open(path, "w", encoding="utf-8") as f:
            f.write("row_index,value\n0,1\n")
        with self.assertRaises(DataError):
            read_scores_csv(path)

    def test_loss_history_csv(self):
        history = [LossRecord(0, 1.5, 0.5, 1.0), LossRecord(10, 0.25, 0.125, 0.125)]
        path = os.path.join(self.temp_dir, "history.csv")
        write_loss_history_csv(path, history)
        self.assertEqual(read_loss_history_csv(path), history)

    def test_model_needs_history(self):
        with self.assertRaises(DataError):
            TrainedModel(
                params=_stub_model().params,
                config=AutoencoderConfig(1, 1),
                norm_params=NormParams(np.array([0.0]), np.array([1.0])),
                loss_history=[],
            )


if __name__ == "__main__":
    unittest.main()
