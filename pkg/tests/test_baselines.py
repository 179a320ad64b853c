"""Fill baselines: mean, forward carry, zero."""

import numpy as np
import pytest

from vrin.baselines import fill, observed_means
from vrin.data import MaskedBatch, bin_to_grid, generate_synthetic


def batch_from(values, mask):
    values = np.asarray(values, dtype=np.float64)
    mask = np.asarray(mask, dtype=np.float64)
    n, t_len, d = values.shape
    return MaskedBatch(values=np.where(mask == 1.0, values, 0.0), mask=mask,
                       delta=np.ones_like(values),
                       timestamps=np.tile(np.arange(t_len, dtype=np.float64), (n, 1)),
                       labels=np.zeros(n, dtype=np.int64))


def test_zero_fill_returns_zero_filled_representation():
    batch = batch_from([[[1.0], [0.0], [2.0]]], [[[1.0], [0.0], [1.0]]])
    assert np.array_equal(fill(batch, "zero"), batch.values)


def test_mean_fill_example():
    batch = batch_from([[[5.0], [0.0]]], [[[1.0], [0.0]]])
    out = fill(batch, "mean", np.array([3.0]))
    assert np.array_equal(out[0, :, 0], [5.0, 3.0])


def test_forward_fill_cold_start_uses_training_mean():
    values = [[[0.0], [4.0], [0.0], [0.0]]]
    mask = [[[0.0], [1.0], [0.0], [0.0]]]
    out = fill(batch_from(values, mask), "forward", np.array([7.0]))
    assert np.array_equal(out[0, :, 0], [7.0, 4.0, 4.0, 4.0])


def test_fill_never_touches_observed_and_leaves_no_gaps():
    grid = bin_to_grid(generate_synthetic(20, 8, 5, 0.6, seed=0), 1.0, 8.0)
    means = observed_means(grid)
    for method in ("mean", "forward", "zero"):
        out = fill(grid, method, means)
        obs = grid.mask == 1.0
        assert np.array_equal(out[obs], grid.values[obs])
        assert np.all(np.isfinite(out))


def test_mean_fill_idempotent():
    grid = bin_to_grid(generate_synthetic(10, 6, 4, 0.5, seed=1), 1.0, 6.0)
    means = observed_means(grid)
    once = fill(grid, "mean", means)
    again_batch = MaskedBatch(values=once, mask=np.ones_like(grid.mask),
                              delta=grid.delta, timestamps=grid.timestamps,
                              labels=grid.labels)
    assert np.array_equal(fill(again_batch, "mean", means), once)


def test_unknown_method_and_missing_stats_rejected():
    batch = batch_from([[[1.0]]], [[[1.0]]])
    with pytest.raises(ValueError, match="method"):
        fill(batch, "median")
    with pytest.raises(ValueError, match="training means"):
        fill(batch, "mean")


def test_observed_means_ignores_missing():
    batch = batch_from([[[2.0], [0.0], [4.0]]], [[[1.0], [0.0], [1.0]]])
    assert np.array_equal(observed_means(batch), [3.0])
