"""Trivial imputation baselines: mean, forward, and zero fill."""

from __future__ import annotations

import numpy as np

from .data import MaskedBatch

FILL_METHODS = ("mean", "forward", "zero")


def observed_means(batch: MaskedBatch) -> np.ndarray:
    """Per-variable mean over a training batch's observed entries."""
    count = batch.mask.sum(axis=(0, 1))
    total = (batch.values * batch.mask).sum(axis=(0, 1))
    return np.where(count > 0, total / np.maximum(count, 1), 0.0)


def fill(batch: MaskedBatch, method: str, train_means: np.ndarray | None = None) -> np.ndarray:
    """Complete a batch without touching observed entries.

    mean: missing entries take the training-split per-variable mean.
    forward: carry the last observed value; before the first observation
    the training mean is used.
    zero: missing entries stay zero (the zero-filled representation).
    """
    if method not in FILL_METHODS:
        raise ValueError(f"method must be one of {FILL_METHODS}, got '{method}'")
    if method in ("mean", "forward") and train_means is None:
        raise ValueError(f"'{method}' fill requires training means")

    values = batch.values.copy()
    if method == "zero":
        return values
    if method == "mean":
        return np.where(batch.mask == 1.0, values, train_means[None, None, :])

    out = np.empty_like(values)
    last = np.tile(train_means, (batch.n_samples, 1))
    for t in range(batch.n_steps):
        observed = batch.mask[:, t, :] == 1.0
        last = np.where(observed, values[:, t, :], last)
        out[:, t, :] = np.where(observed, values[:, t, :], last)
    return out
