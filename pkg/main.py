#!/usr/bin/env python3
"""
MSE-eig 自編碼器離群點偵測 命令列工具
子指令：gen-data、train、score、auc、suite、plot、spectrum
結束碼：0 成功、2 設定錯誤、3 資料錯誤（含檔案不存在）、4 數值失敗
"""

import argparse
import os
import sys
from typing import List, Optional

from dotenv import load_dotenv

from src.config import (
    SUITES,
    configure_logging,
    env_out_dir,
    env_seed,
    parse_batch_size,
    parse_beta,
    parse_ratios,
    suite_config,
    train_settings,
)
from src.data import (
    LOWDIM_FAMILIES,
    gen_gaussian,
    gen_highdim_gaussian,
    gen_manifold3d,
    gen_noisy_gaussian,
    label_hlp,
    load_csv,
    lowdim_family,
    normalize_minmax,
    save_csv,
    write_generator_manifest,
)
from src.detect import (
    TrainConfig,
    flag_outliers,
    load_model,
    read_scores_csv,
    reconstruction_curves,
    save_model,
    score,
    train,
    write_curves_csv,
    write_loss_history_csv,
    write_scores_csv,
)
from src.errors import ConfigError, DataError, MseEigError
from src.evaluation import auc, emit_report, rerun_from_manifest, run_suite
from src.linalg import eigen_spectrum
from src.loss import build_loss_config
from src.network import AutoencoderConfig
from src.plotting import curves_svg, scatter_svg

# 載入 .env 檔案
load_dotenv()


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    seed = env_seed()
    return 0 if seed is None else seed


def _out_dir(args) -> str:
    return args.out_dir or env_out_dir()


def _floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from e


def _banner(title: str) -> None:
    print(f"\n{'=' * 60}")
    print(title)
    print(f"{'=' * 60}\n")


def cmd_gen_data(args) -> int:
    seed = _seed(args)
    out_dir = _out_dir(args)
    name = args.name or args.kind

    if args.kind == "manifold":
        train_ds, test_ds = gen_manifold3d(args.n, args.n_test or args.n, args.ip_ratio, seed)
        outputs = [(train_ds, f"{name}_train.csv"), (test_ds, f"{name}_test.csv")]
    else:
        if args.kind == "lowdim":
            ds = lowdim_family(args.family, args.n, seed)
        elif args.kind == "highdim":
            ds = gen_highdim_gaussian(args.n, args.m, seed)
        else:
            variances = _floats(args.cov_diag)
            mean = _floats(args.mean) if args.mean else [0.0] * len(variances)
            cov = [[v if i == j else 0.0 for j in range(len(variances))] for i, v in enumerate(variances)]
            if args.kind == "noisy":
                ds = gen_noisy_gaussian(args.n, mean, cov, args.noise_fraction, args.noise_scale, seed)
            else:
                ds = gen_gaussian(args.n, mean, cov, seed)
        if args.hlp_ratio is not None:
            ds = label_hlp(ds, args.hlp_ratio)
        outputs = [(ds, f"{name}.csv")]

    for ds, filename in outputs:
        path = os.path.join(out_dir, filename)
        save_csv(ds, path)
        manifest = write_generator_manifest(ds, path)
        print(f"Wrote {ds.n} rows x {ds.m} columns to {path} (manifest: {manifest})")
    return 0


def _train_config(args, ds, intrinsic_dim: int) -> TrainConfig:
    settings = train_settings(
        override_path=args.config,
        overrides={
            "epochs": args.epochs,
            "batch_size": parse_batch_size(args.batch_size),
            "learning_rate": args.lr,
            "beta": parse_beta(args.beta),
            "record_every": args.record_every,
        },
    )
    loss_cfg = None
    if args.loss == "mse-eig":
        loss_cfg = build_loss_config(
            ds.samples, intrinsic_dim, settings.beta, settings.theta1, settings.theta2
        )
    return TrainConfig(
        epochs=settings.epochs,
        batch_size=settings.batch_size,
        learning_rate=settings.learning_rate,
        loss=loss_cfg,
        seed=_seed(args),
        record_every=settings.record_every,
        init=settings.init,
        warmup_epochs=settings.warmup_epochs,
    )


def cmd_train(args) -> int:
    ds = normalize_minmax(load_csv(args.data))
    intrinsic_dim = args.intrinsic_dim or ds.m
    train_cfg = _train_config(args, ds, intrinsic_dim)
    net_cfg = AutoencoderConfig(input_dim=ds.m, hidden_dim=intrinsic_dim, seed=_seed(args))

    _banner(f"Training {train_cfg.loss_name} autoencoder on {args.data}")
    model = train(ds, net_cfg, train_cfg)

    model_path = args.out or os.path.join(_out_dir(args), "model.json")
    save_model(model, model_path)
    history_path = os.path.splitext(model_path)[0] + "_loss_history.csv"
    write_loss_history_csv(history_path, model.loss_history)

    first, last = model.loss_history[0], model.final_loss
    print(f"Initial loss: {first.total:.6g} (mse={first.mse_part:.6g}, eig={first.eig_part:.6g})")
    print(f"Final loss:   {last.total:.6g} (mse={last.mse_part:.6g}, eig={last.eig_part:.6g})")
    if model.loss_config is not None:
        print(f"beta: {model.loss_config.beta:.6g}")
    print(f"Model saved to {model_path}")
    print(f"Loss history saved to {history_path}")
    return 0


def cmd_score(args) -> int:
    model = load_model(args.model)
    ds = load_csv(args.data)
    scores = score(model, ds)
    out = args.out or os.path.join(_out_dir(args), "scores.csv")
    write_scores_csv(out, scores, ds.labels)
    print(f"Scored {len(scores)} rows -> {out}")
    if ds.labels is not None and 0 < ds.labels.sum() < len(ds.labels):
        print(f"AUC against file labels: {auc(scores, ds.labels):.4f}")
    return 0


def cmd_auc(args) -> int:
    scores, labels = read_scores_csv(args.scores)
    if args.labels:
        labels = load_csv(args.labels).labels
    if labels is None:
        raise DataError("no labels: the scores file has no label column and --labels was not given")
    print(f"{auc(scores, labels):.6f}")
    return 0


def cmd_suite(args) -> int:
    if args.from_manifest:
        report = rerun_from_manifest(args.from_manifest)
    else:
        overrides = {
            "seed": args.seed,
            "ratios": parse_ratios(args.ratios) if args.ratios else None,
            "epochs": args.epochs,
            "beta": parse_beta(args.beta),
            "batch_size": parse_batch_size(args.batch_size),
            "learning_rate": args.lr,
            "record_every": args.record_every,
            "train_csv": args.train_csv,
            "test_csv": args.test_csv,
            "intrinsic_dim": args.intrinsic_dim,
        }
        if args.suite == "csv":
            for path in (args.train_csv, args.test_csv):
                if path and not os.path.exists(path):
                    raise FileNotFoundError(path)
        config = suite_config(args.suite, override_path=args.config, overrides=overrides)
        _banner(f"Running {config.suite} suite: {len(config.dataset_keys())} dataset(s) x {len(config.seeds)} seed(s)")
        report = run_suite(config)

    out_dir = os.path.join(_out_dir(args), report.suite)
    paths = emit_report(report, out_dir)
    print(f"{'experiment':<20} {'dataset':<10} {'ratio':>6} {'method':<12} {'auc':>8}")
    for entry in report.entries:
        print(f"{entry.experiment_id:<20} {entry.dataset:<10} {entry.ratio:>6.2f} {entry.method:<12} {entry.auc:>8.4f}")
    print(f"\nReport written to {out_dir} ({len(paths)} files, {report.wall_time:.1f}s)")
    return 0


def cmd_plot(args) -> int:
    model = load_model(args.model)
    ds = load_csv(args.data)
    out_dir = _out_dir(args)
    stem = os.path.splitext(os.path.basename(args.data))[0]

    scores = score(model, ds)
    flags = flag_outliers(scores, args.ratio)
    path = scatter_svg(
        os.path.join(out_dir, f"scatter_{stem}.svg"),
        model.normalized_inputs(ds),
        flags,
        ds.column_names,
        f"{stem}: flagged top {args.ratio:g}",
        ds.labels,
    )
    print(f"Scatter plot: {path}")

    if args.curves:
        curves = reconstruction_curves(model, ds, bins=args.bins)
        svg = curves_svg(os.path.join(out_dir, f"curves_{stem}.svg"), curves, f"{stem}: reconstruction curves")
        csv_path = os.path.join(out_dir, f"curves_{stem}.csv")
        write_curves_csv(csv_path, curves)
        print(f"Reconstruction curves: {svg}, {csv_path}")
    return 0


def cmd_spectrum(args) -> int:
    ds = normalize_minmax(load_csv(args.data))
    values, ratios = eigen_spectrum(ds.samples)
    cumulative = 0.0
    print(f"{'k':>3} {'eigenvalue':>14} {'ratio':>8} {'cumulative':>11}")
    for k, (value, ratio) in enumerate(zip(values, ratios), start=1):
        cumulative += ratio
        print(f"{k:>3} {value:>14.6g} {ratio:>8.4f} {cumulative:>11.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed (default: MSE_EIG_SEED or 0)")
    common.add_argument("--out-dir", default=None, help="output directory (default: MSE_EIG_OUT_DIR or results)")
    common.add_argument("--config", default=None, help="JSON config overriding config/experiments.json")
    common.add_argument("--ratios", default=None, help="outlier ratios, e.g. 0.01..0.10:0.01 or 0.01,0.05")
    common.add_argument("--epochs", type=int, default=None)
    common.add_argument("--beta", default=None, help="auto (selection rule) or a positive value")
    common.add_argument("--loss", choices=["mse", "mse-eig"], default="mse-eig")
    common.add_argument("--intrinsic-dim", type=int, default=None)
    common.add_argument("--lr", type=float, default=None, help="learning rate (default: config train section)")
    common.add_argument("--batch-size", default=None, help="integer or 'full'")
    common.add_argument("--record-every", type=int, default=None)
    common.add_argument("--log-level", default=None)

    parser = argparse.ArgumentParser(description="Autoencoder outlier detection with the MSE-eig loss")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", parents=[common], help="generate a synthetic dataset CSV")
    p.add_argument("kind", choices=["gaussian", "noisy", "lowdim", "manifold", "highdim"])
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--m", type=int, default=50)
    p.add_argument("--n-test", type=int, default=None)
    p.add_argument("--family", choices=sorted(LOWDIM_FAMILIES), default="dataset1")
    p.add_argument("--mean", default=None)
    p.add_argument("--cov-diag", default="1,0.25")
    p.add_argument("--noise-fraction", type=float, default=0.01)
    p.add_argument("--noise-scale", type=float, default=4.0)
    p.add_argument("--ip-ratio", type=float, default=0.05)
    p.add_argument("--hlp-ratio", type=float, default=None, help="label the top ratio by Mahalanobis distance")
    p.add_argument("--name", default=None)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", parents=[common], help="train an autoencoder on a dataset CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--out", default=None, help="model JSON path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", parents=[common], help="score a dataset with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("auc", parents=[common], help="AUC of a scores file")
    p.add_argument("--scores", required=True)
    p.add_argument("--labels", default=None, help="dataset CSV with a label column")
    p.set_defaults(func=cmd_auc)

    p = sub.add_parser("suite", parents=[common], help="run an experiment suite")
    p.add_argument("suite", choices=SUITES)
    p.add_argument("--train-csv", default=None)
    p.add_argument("--test-csv", default=None)
    p.add_argument("--from-manifest", default=None, help="re-run the suite recorded in a manifest.json")
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("plot", parents=[common], help="scatter plot of flagged outliers")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--ratio", type=float, default=0.05)
    p.add_argument("--curves", action="store_true", help="also render reconstruction curves")
    p.add_argument("--bins", type=int, default=20)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("spectrum", parents=[common], help="covariance eigenvalues of a dataset")
    p.add_argument("--data", required=True)
    p.set_defaults(func=cmd_spectrum)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """主程式"""
    args = build_parser().parse_args(argv)
    try:
        configure_logging(args.log_level)
        return args.func(args)
    except MseEigError as e:
        print(f"Error: {e}", file=sys.stderr)
        return e.exit_code
    except FileNotFoundError as e:
        print(f"Error: file not found: {e.filename or e}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
