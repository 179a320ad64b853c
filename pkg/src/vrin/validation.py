"""Input validation helpers for the estimator API."""

from __future__ import annotations

import numpy as np

from .data import MaskedBatch, build_delta


def check_sequence_array(X, name: str = "X") -> np.ndarray:
    """Validate a (N, T, D) float array where NaN marks missing entries."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim != 3:
        raise ValueError(f"{name} must be 3-dimensional (samples, time steps, "
                         f"variables), got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0 or arr.shape[2] == 0:
        raise ValueError(f"{name} has an empty dimension: shape {arr.shape}")
    if np.isinf(arr).any():
        raise ValueError(f"{name} contains infinite values; only NaN marks missing data")
    return arr


def check_timestamps(timestamps, n_samples: int, n_steps: int) -> np.ndarray:
    ts = np.asarray(timestamps, dtype=np.float64)
    if ts.ndim == 1:
        ts = np.tile(ts, (n_samples, 1))
    if ts.shape != (n_samples, n_steps):
        raise ValueError(f"timestamps must have shape ({n_samples}, {n_steps}) "
                         f"or ({n_steps},), got {ts.shape}")
    if np.any(np.diff(ts, axis=1) <= 0):
        raise ValueError("timestamps must be strictly increasing per sample")
    return ts


def check_binary_labels(y, n_samples: int) -> np.ndarray:
    arr = np.asarray(y)
    if arr.shape != (n_samples,):
        raise ValueError(f"y must have shape ({n_samples},), got {arr.shape}")
    values = np.unique(arr)
    if not np.all(np.isin(values, (0, 1))):
        raise ValueError(f"y must be binary 0/1, got values {values}")
    return arr.astype(np.int64)


def batch_from_arrays(X: np.ndarray, y=None, timestamps=None,
                      window_hours: float = 1.0) -> MaskedBatch:
    """Build the grid representation from a NaN-marked dense array."""
    X = check_sequence_array(X)
    n, t_len, _ = X.shape
    if timestamps is None:
        timestamps = np.tile(np.arange(t_len, dtype=np.float64) * window_hours, (n, 1))
    else:
        timestamps = check_timestamps(timestamps, n, t_len)
    mask = (~np.isnan(X)).astype(np.float64)
    if not mask.any(axis=(1, 2)).all():
        empty = np.where(~mask.any(axis=(1, 2)))[0]
        raise ValueError(f"samples with no observations at all: {empty.tolist()}")
    values = np.where(mask == 1.0, np.nan_to_num(X), 0.0)
    labels = check_binary_labels(y, n) if y is not None else np.zeros(n, dtype=np.int64)
    return MaskedBatch(values=values, mask=mask,
                       delta=build_delta(mask, timestamps),
                       timestamps=timestamps, labels=labels)
