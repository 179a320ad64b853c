"""Training loop, evaluation entry points, and cross-validation."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .config import TrainConfig
from .data import (MaskedBatch, NormalizationStats, RemovalRecord, denormalize_values,
                   kfold_split, normalize, remove_values)
from .losses import LossBreakdown
from .metrics import average_precision, imputation_metrics, roc_auc
from .model import VrinModel
from .optim import Adam
from .rng import RandomStreams

log = logging.getLogger(__name__)

_TERM_ORDER = ("l_vae", "l_reg", "l_pred", "l_cons", "l_total")


class TrainingDivergedError(ArithmeticError):
    """Loss turned non-finite during optimization."""


@dataclass
class RunReport:
    """Per-epoch loss history plus final metrics.

    ``wall_time_s`` is informational only and deliberately excluded from
    the serialized report so that identical seeds produce byte-identical
    report files.
    """

    config: TrainConfig
    seed: int
    epochs: list = field(default_factory=list)  # LossBreakdown per epoch
    final_metrics: dict = field(default_factory=dict)
    wall_time_s: float = 0.0

    def to_text(self) -> str:
        from .config import config_to_text
        lines = ["[config]", config_to_text(self.config).rstrip(), "",
                 "[epochs]",
                 "epoch l_total l_vae l_reg l_pred l_cons l1_penalty"]
        for i, b in enumerate(self.epochs, 1):
            lines.append(f"{i} {b.l_total!r} {b.l_vae!r} {b.l_reg!r} "
                         f"{b.l_pred!r} {b.l_cons!r} {b.l1_penalty!r}")
        lines.append("")
        lines.append("[metrics]")
        for key in sorted(self.final_metrics):
            value = self.final_metrics[key]
            lines.append(f"{key} = {value!r}" if isinstance(value, float)
                         else f"{key} = {value}")
        return "\n".join(lines) + "\n"


def _check_terms(breakdown: LossBreakdown, epoch: int, batch_index: int) -> None:
    for name in _TERM_ORDER:
        if not np.isfinite(getattr(breakdown, name)):
            raise TrainingDivergedError(
                f"non-finite loss term '{name}' at epoch {epoch}, batch {batch_index}")


def train(batch: MaskedBatch, config: TrainConfig,
          streams: RandomStreams | None = None,
          include_prediction: bool = True,
          progress=None) -> tuple[VrinModel, RunReport]:
    """Optimize a fresh model on an already-normalized batch.

    Deterministic given the seed: shuffling, dropout, latent noise, and
    initialization each draw from their own stream. The last short
    mini-batch of an epoch is trained like any other.
    """
    config.validate()
    streams = streams if streams is not None else RandomStreams(config.seed)
    model = VrinModel(config, init_rng=streams.init)
    optimizer = Adam(model.parameters(), lr=config.learning_rate,
                     weight_decay=config.weight_decay)
    report = RunReport(config=config, seed=config.seed)

    n = batch.n_samples
    started = time.perf_counter()
    for epoch in range(1, config.epochs + 1):
        order = streams.shuffle.permutation(n)
        sums = {k: 0.0 for k in ("l_vae", "l_reg", "l_pred", "l_cons", "l_total",
                                 "l1_penalty")}
        n_batches = 0
        warned_empty = False
        for start in range(0, n, config.batch_size):
            mini = batch.subset(order[start:start + config.batch_size])
            model.store.zero_grad()
            try:
                with ad.record() as tape:
                    total, breakdown, _ = model.compute_losses(
                        mini, training=True, streams=streams,
                        include_prediction=include_prediction)
            except ad.NumericError as exc:
                raise TrainingDivergedError(
                    f"epoch {epoch}, batch {n_batches}: {exc}") from exc
            _check_terms(breakdown, epoch, n_batches)
            tape.backward(total)
            optimizer.step()
            for key in sums:
                sums[key] += getattr(breakdown, key)
            warned_empty = warned_empty or breakdown.no_observed_entries
            n_batches += 1
        if warned_empty:
            log.warning("epoch %d: a mini-batch had no observed entries", epoch)
        report.epochs.append(LossBreakdown(
            **{k: sums[k] / n_batches for k in sums}))
        if progress is not None:
            progress(epoch, report.epochs[-1])
    report.wall_time_s = time.perf_counter() - started
    return model, report


def evaluate_classification(model: VrinModel, batch: MaskedBatch) -> tuple[float, float]:
    """(AUC, AUPRC) on a normalized batch; dropout off, latent at its mean."""
    scores = model.predict_scores(batch)
    return roc_auc(scores, batch.labels), average_precision(scores, batch.labels)


def evaluate_imputation(model: VrinModel, batch: MaskedBatch, record: RemovalRecord,
                        stats: NormalizationStats) -> tuple[float, float, float]:
    """(MAE, MRE, MSE) at removed positions, in original units.

    ``batch`` must be the normalized post-removal batch; the record holds
    raw-unit ground truth, so completions are de-normalized before
    scoring.
    """
    if len(record) == 0:
        raise ValueError("imputation evaluation needs a non-empty removal record")
    outputs = model.impute(batch)
    # canonical position order makes the metric sums independent of how the
    # record happens to be ordered
    entries = sorted(record.entries)
    pos = np.asarray([(n, t, d) for n, t, d, _ in entries], dtype=np.intp)
    truth = np.asarray([v for _, _, _, v in entries], dtype=np.float64)
    estimates = outputs.completed[pos[:, 0], pos[:, 1], pos[:, 2]]
    estimates = denormalize_values(estimates, stats, variable_idx=pos[:, 2])
    return imputation_metrics(truth, estimates)


def format_mean_std(values) -> str:
    values = np.asarray(values, dtype=np.float64)
    std = values.std(ddof=1) if values.size > 1 else 0.0
    return f"{values.mean():.4f} ± {std:.4f}"


def crossvalidate(raw_batch: MaskedBatch, config: TrainConfig, k: int = 5,
                  task: str = "classification", removal_fraction: float = 0.0,
                  removal_seed: int | None = None) -> dict:
    """K-fold train/evaluate over an unnormalized batch.

    Classification removes ``removal_fraction`` of each fold's training
    observations only; imputation removes the fraction from the full
    dataset up front as ground truth. Returns per-metric fold values plus
    "mean +- std" strings.
    """
    if task not in ("classification", "imputation"):
        raise ValueError(f"task must be 'classification' or 'imputation', got '{task}'")
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    removal_seed = config.seed if removal_seed is None else removal_seed
    folds = kfold_split(raw_batch.n_samples, k, config.seed)
    all_idx = np.arange(raw_batch.n_samples)

    working = raw_batch
    record = None
    if task == "imputation":
        if removal_fraction <= 0.0:
            raise ValueError("imputation cross-validation needs removal_fraction > 0")
        working, record = remove_values(raw_batch, removal_fraction,
                                        scope="all_splits", seed=removal_seed)

    per_metric: dict[str, list] = {}
    for fold_i, test_idx in enumerate(folds):
        train_idx = np.setdiff1d(all_idx, test_idx)
        train_raw = working.subset(train_idx)
        if task == "classification" and removal_fraction > 0.0:
            train_raw, _ = remove_values(train_raw, removal_fraction,
                                         scope="all_splits", seed=removal_seed + fold_i)
        train_norm, stats = normalize(train_raw)
        streams = RandomStreams(np.random.SeedSequence([config.seed, fold_i]))
        model, _ = train(train_norm, config, streams=streams)
        test_norm, _ = normalize(working.subset(test_idx), stats)
        if task == "classification":
            auc, auprc = evaluate_classification(model, test_norm)
            per_metric.setdefault("auc", []).append(auc)
            per_metric.setdefault("auprc", []).append(auprc)
        else:
            fold_record = record.for_samples(test_idx)
            # Record sample ids refer to the full batch; remap to the subset.
            remap = {int(orig): local for local, orig in enumerate(test_idx)}
            fold_record = RemovalRecord(
                [(remap[n], t, d, v) for n, t, d, v in fold_record.entries])
            mae, mre, mse = evaluate_imputation(model, test_norm, fold_record, stats)
            per_metric.setdefault("mae", []).append(mae)
            per_metric.setdefault("mre", []).append(mre)
            per_metric.setdefault("mse", []).append(mse)

    result = {}
    for name, values in per_metric.items():
        arr = np.asarray(values)
        result[name] = {
            "values": [float(v) for v in values],
            "mean": float(arr.mean()),
            "std": float(arr.std(ddof=1)) if arr.size > 1 else 0.0,
            "formatted": format_mean_std(arr),
        }
    return result
