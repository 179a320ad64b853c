"""Command-line entry points: generate, train, evaluate, impute.

Exit codes: 0 success, 2 usage/config error, 3 data/model mismatch,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .config import (ConfigError, TrainConfig, classification_preset,
                     imputation_preset, read_config_values)
from .data import (NormalizationStats, bin_to_grid, generate_synthetic, kfold_split,
                   load_dataset, normalize, remove_values, save_dataset)
from .model import VrinModel
from .training import (TrainingDivergedError, evaluate_classification,
                       evaluate_imputation, format_mean_std, train)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISMATCH = 3
EXIT_NUMERIC = 4

CHECKPOINT_NAME = "model.vrin"
REPORT_NAME = "report.txt"


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vrin",
        description="Train and apply the uncertainty-aware variational-recurrent "
                    "imputation network on long-format observation files.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic dataset")
    gen.add_argument("--out", required=True, help="output directory")
    gen.add_argument("--patients", type=int, default=500)
    gen.add_argument("--time-steps", type=int, default=24)
    gen.add_argument("--features", type=int, default=8)
    gen.add_argument("--missing-rate", type=float, default=0.5)
    gen.add_argument("--positive-rate", type=float, default=0.15)
    gen.add_argument("--window-hours", type=float, default=1.0)
    gen.add_argument("--seed", type=int, default=0)

    tr = sub.add_parser("train", help="train a model and write checkpoint + report")
    tr.add_argument("--data", required=True, help="dataset directory")
    tr.add_argument("--out", required=True, help="output directory")
    tr.add_argument("--task", required=True, choices=["classification", "imputation"])
    tr.add_argument("--config", help="flat key = value config file")
    tr.add_argument("--direction", choices=["uni", "bi"])
    tr.add_argument("--variant", choices=["v-rin", "v-rin-full"])
    tr.add_argument("--seed", type=int)
    tr.add_argument("--removal", type=float, default=0.0,
                    help="fraction of observed entries hidden before training")
    tr.add_argument("--removal-seed", type=int)

    ev = sub.add_parser("evaluate", help="evaluate a checkpoint on a dataset")
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--task", required=True, choices=["classification", "imputation"])
    ev.add_argument("--removal", type=float,
                    help="removal fraction for imputation ground truth, e.g. 0.05 or 0.10")
    ev.add_argument("--folds", type=int, default=1)
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--out", help="also write the metrics report to this file")

    im = sub.add_parser("impute", help="write completed series and predictions")
    im.add_argument("--checkpoint", required=True)
    im.add_argument("--data", required=True)
    im.add_argument("--out", required=True, help="output directory")
    im.add_argument("--seed", type=int, default=0)
    return parser


def _load_grid(data_dir: str, cfg: TrainConfig):
    try:
        series, names = load_dataset(data_dir)
    except FileNotFoundError as exc:
        raise CliError(str(exc), EXIT_USAGE) from exc
    if len(names) != cfg.n_features:
        raise CliError(
            f"dataset has {len(names)} variables but the model expects "
            f"{cfg.n_features}", EXIT_MISMATCH)
    grid = bin_to_grid(series, cfg.window_hours, cfg.n_steps * cfg.window_hours)
    return grid, names


def _cmd_generate(args) -> int:
    series = generate_synthetic(args.patients, args.time_steps, args.features,
                                args.missing_rate, positive_rate=args.positive_rate,
                                seed=args.seed, window_hours=args.window_hours)
    names = [f"var{d:02d}" for d in range(args.features)]
    try:
        save_dataset(args.out, series, names)
    except OSError as exc:
        raise CliError(f"cannot write dataset to '{args.out}': {exc}", EXIT_USAGE) from exc
    observed = sum(len(s.events) for s in series)
    total = args.patients * args.time_steps * args.features
    print(f"wrote {args.patients} patients to {args.out} "
          f"(observed fraction {observed / total:.3f})")
    return EXIT_OK


def _resolve_train_config(args, n_features: int) -> TrainConfig:
    base = classification_preset() if args.task == "classification" else imputation_preset()
    explicit: dict = {}
    if args.config:
        explicit = read_config_values(args.config)
    cfg = replace(base, **explicit)
    if "n_features" in explicit and explicit["n_features"] != n_features:
        raise CliError(
            f"config sets n_features={explicit['n_features']} but the dataset "
            f"has {n_features} variables", EXIT_MISMATCH)
    cfg = replace(cfg, n_features=n_features)
    if args.direction:
        cfg = replace(cfg, direction=args.direction)
    if args.variant:
        cfg = replace(cfg, variant=args.variant.replace("-", "_"))
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    cfg.validate()
    return cfg


def _cmd_train(args) -> int:
    try:
        series, names = load_dataset(args.data)
    except FileNotFoundError as exc:
        raise CliError(str(exc), EXIT_USAGE) from exc
    cfg = _resolve_train_config(args, len(names))
    grid = bin_to_grid(series, cfg.window_hours, cfg.n_steps * cfg.window_hours)

    if args.removal > 0.0:
        removal_seed = args.removal_seed if args.removal_seed is not None else cfg.seed
        grid, record = remove_values(grid, args.removal, scope="all_splits",
                                     seed=removal_seed)
        print(f"hid {len(record)} observed entries before training "
              f"(fraction {args.removal}, seed {removal_seed})")

    normalized, stats = normalize(grid)
    model, report = train(normalized, cfg)

    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        arrays = model.store.state_arrays()
        arrays.update(stats.to_arrays())
        save_checkpoint(out / CHECKPOINT_NAME, cfg.to_dict(), arrays)
        (out / REPORT_NAME).write_text(report.to_text(), encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot write outputs to '{args.out}': {exc}", EXIT_USAGE) from exc
    final = report.epochs[-1]
    print(f"trained {cfg.epochs} epochs; final l_total {final.l_total:.6f} "
          f"(wall {report.wall_time_s:.1f}s)")
    print(f"checkpoint: {out / CHECKPOINT_NAME}")
    print(f"report: {out / REPORT_NAME}")
    return EXIT_OK


def _load_model(checkpoint_path: str):
    try:
        config_dict, arrays = load_checkpoint(checkpoint_path)
    except FileNotFoundError as exc:
        raise CliError(str(exc), EXIT_USAGE) from exc
    except CheckpointError as exc:
        raise CliError(str(exc), EXIT_MISMATCH) from exc
    try:
        cfg = TrainConfig.from_dict(config_dict)
    except ConfigError as exc:
        raise CliError(f"bad config echo in checkpoint: {exc}", EXIT_MISMATCH) from exc
    model = VrinModel(cfg)
    try:
        model.store.load_arrays(arrays)
        stats = NormalizationStats.from_arrays(arrays)
    except (KeyError, ValueError) as exc:
        raise CliError(f"checkpoint does not match the model: {exc}", EXIT_MISMATCH) from exc
    return model, cfg, stats


def _cmd_evaluate(args) -> int:
    model, cfg, stats = _load_model(args.checkpoint)
    grid, _ = _load_grid(args.data, cfg)
    if args.folds < 1:
        raise CliError(f"--folds must be >= 1, got {args.folds}", EXIT_USAGE)

    lines = ["[evaluation]", f"task = {args.task}", f"folds = {args.folds}",
             f"seed = {args.seed}", ""]
    if args.task == "classification":
        normalized, _ = normalize(grid, stats)
        folds = (kfold_split(grid.n_samples, args.folds, args.seed)
                 if args.folds > 1 else [np.arange(grid.n_samples)])
        aucs, auprcs = [], []
        for fold in folds:
            auc, auprc = evaluate_classification(model, normalized.subset(fold))
            aucs.append(auc)
            auprcs.append(auprc)
        lines += ["[metrics]", f"auc = {format_mean_std(aucs)}",
                  f"auprc = {format_mean_std(auprcs)}"]
    else:
        if args.removal is None:
            raise CliError("imputation evaluation requires --removal", EXIT_USAGE)
        removed, record = remove_values(grid, args.removal, scope="all_splits",
                                        seed=args.seed)
        if len(record) == 0:
            raise CliError("removal produced no ground-truth entries", EXIT_USAGE)
        normalized, _ = normalize(removed, stats)
        if args.folds > 1:
            folds = kfold_split(grid.n_samples, args.folds, args.seed)
        else:
            folds = [np.arange(grid.n_samples)]
        maes, mres, mses = [], [], []
        for fold in folds:
            fold_record = record.for_samples(fold)
            remap = {int(orig): local for local, orig in enumerate(fold)}
            fold_record.entries = [(remap[n], t, d, v) for n, t, d, v in fold_record.entries]
            mae, mre, mse = evaluate_imputation(model, normalized.subset(fold),
                                                fold_record, stats)
            maes.append(mae)
            mres.append(mre)
            mses.append(mse)
        lines += ["[metrics]", f"removal = {args.removal}",
                  f"mae = {format_mean_std(maes)}",
                  f"mre = {format_mean_std(mres)}",
                  f"mse = {format_mean_std(mses)}"]

    text = "\n".join(lines) + "\n"
    print(text, end="")
    if args.out:
        try:
            Path(args.out).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise CliError(f"cannot write report to '{args.out}': {exc}", EXIT_USAGE) from exc
    return EXIT_OK


def _cmd_impute(args) -> int:
    model, cfg, stats = _load_model(args.checkpoint)
    grid, names = _load_grid(args.data, cfg)
    normalized, _ = normalize(grid, stats)
    outputs = model.impute(normalized)

    completed = outputs.completed * stats.std[None, None, :] + stats.mean[None, None, :]
    completed = np.where(grid.mask == 1.0, grid.values, completed)
    uncertainty = outputs.uncertainty * stats.std[None, None, :]

    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        with (out / "imputed.csv").open("w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(["patient_id", "timestamp", "variable", "value", "source",
                        "uncertainty"])
            for i in range(grid.n_samples):
                pid = grid.patient_ids[i] if grid.patient_ids else str(i)
                for t in range(grid.n_steps):
                    for d in range(grid.n_features):
                        source = "observed" if grid.mask[i, t, d] == 1.0 else "imputed"
                        w.writerow([pid, repr(float(grid.timestamps[i, t])), names[d],
                                    repr(float(completed[i, t, d])), source,
                                    repr(float(uncertainty[i, t, d]))])
        with (out / "predictions.csv").open("w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(["patient_id", "score"])
            for i in range(grid.n_samples):
                pid = grid.patient_ids[i] if grid.patient_ids else str(i)
                w.writerow([pid, repr(float(outputs.scores[i]))])
    except OSError as exc:
        raise CliError(f"cannot write outputs to '{args.out}': {exc}", EXIT_USAGE) from exc
    print(f"wrote {grid.n_samples * grid.n_steps * grid.n_features} rows to "
          f"{out / 'imputed.csv'}")
    print(f"wrote predictions to {out / 'predictions.csv'}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {"generate": _cmd_generate, "train": _cmd_train,
                "evaluate": _cmd_evaluate, "impute": _cmd_impute}
    try:
        return handlers[args.command](args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TrainingDivergedError, ad.NumericError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
