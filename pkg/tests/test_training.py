"""Training loop contracts: smoke, determinism, evaluation, cross-validation."""

import numpy as np
import pytest

from vrin.config import TrainConfig
from vrin.data import bin_to_grid, generate_synthetic, normalize, remove_values
from vrin.model import VrinModel
from vrin.rng import RandomStreams
from vrin.training import (TrainingDivergedError, crossvalidate,
                           evaluate_classification, evaluate_imputation,
                           format_mean_std, train)

TINY = dict(n_steps=5, n_features=4, hidden_size=6, latent_dim=3,
            encoder_sizes=(6, 4), batch_size=4, epochs=1)


@pytest.fixture(scope="module")
def tiny_batch():
    series = generate_synthetic(8, 5, 4, 0.4, seed=2)
    batch = bin_to_grid(series, 1.0, 5.0)
    batch, _ = normalize(batch)
    return batch


class TestTrain:
    def test_smoke_one_epoch(self, tiny_batch):
        model, report = train(tiny_batch, TrainConfig(**TINY))
        assert len(report.epochs) == 1
        assert np.isfinite(report.epochs[0].l_total)

    def test_same_seed_identical_parameters_and_report(self, tiny_batch):
        cfg = TrainConfig(**{**TINY, "epochs": 3, "seed": 5})
        m1, r1 = train(tiny_batch, cfg)
        m2, r2 = train(tiny_batch, cfg)
        for name in m1.store.names():
            assert np.array_equal(m1.store[name].data, m2.store[name].data)
        assert r1.to_text() == r2.to_text()

    def test_different_seed_different_parameters(self, tiny_batch):
        m1, _ = train(tiny_batch, TrainConfig(**{**TINY, "seed": 1}))
        m2, _ = train(tiny_batch, TrainConfig(**{**TINY, "seed": 2}))
        assert any(not np.array_equal(m1.store[n].data, m2.store[n].data)
                   for n in m1.store.names())

    def test_report_excludes_wall_time(self, tiny_batch):
        _, report = train(tiny_batch, TrainConfig(**TINY))
        assert report.wall_time_s > 0.0
        assert "wall" not in report.to_text()

    def test_remainder_batch_trained(self, tiny_batch):
        # 8 samples, batch 5 -> batches of 5 and 3
        cfg = TrainConfig(**{**TINY, "batch_size": 5})
        model, report = train(tiny_batch, cfg)
        assert np.isfinite(report.epochs[0].l_total)

    def test_divergence_aborts_with_term_name(self, tiny_batch):
        cfg = TrainConfig(**{**TINY, "learning_rate": 1.0, "epochs": 60})
        streams = RandomStreams(cfg.seed)
        model = VrinModel(cfg, init_rng=streams.init)
        # blow up the decoder variance head so exp() overflows downstream
        model.store["vae.dec.logvar.b"].data[:] = 1e6
        with pytest.raises(TrainingDivergedError):
            bad = tiny_batch.copy()
            bad.values[:] = 1e200
            bad.values *= tiny_batch.mask
            train(bad, cfg, streams=streams)

    def test_progress_callback_invoked(self, tiny_batch):
        seen = []
        train(tiny_batch, TrainConfig(**{**TINY, "epochs": 2}),
              progress=lambda epoch, b: seen.append(epoch))
        assert seen == [1, 2]


class TestEvaluate:
    def test_classification_chance_level_untrained(self):
        series = generate_synthetic(120, 5, 4, 0.4, positive_rate=0.5, seed=3)
        batch, _ = normalize(bin_to_grid(series, 1.0, 5.0))
        labels = np.random.default_rng(0).integers(0, 2, size=120)
        batch.labels = labels
        model = VrinModel(TrainConfig(**TINY), init_rng=RandomStreams(1).init)
        auc, _ = evaluate_classification(model, batch)
        assert 0.4 <= auc <= 0.6

    def test_classification_repeatable(self, tiny_batch):
        model, _ = train(tiny_batch, TrainConfig(**TINY))
        a = evaluate_classification(model, tiny_batch)
        b = evaluate_classification(model, tiny_batch)
        assert a == b

    def test_imputation_metrics_match_manual_readout(self):
        series = generate_synthetic(10, 5, 4, 0.3, seed=4)
        grid = bin_to_grid(series, 1.0, 5.0)
        removed, record = remove_values(grid, 0.15, seed=1)
        norm, stats = normalize(removed)
        model, _ = train(norm, TrainConfig(**{**TINY, "epochs": 2}))
        mae, mre, mse = evaluate_imputation(model, norm, record, stats)
        out = model.impute(norm)
        pos = record.positions()
        est = out.completed[pos[:, 0], pos[:, 1], pos[:, 2]]
        est = est * stats.std[pos[:, 2]] + stats.mean[pos[:, 2]]
        truth = record.true_values()
        assert mae == pytest.approx(np.abs(est - truth).mean(), abs=1e-12)
        assert mse == pytest.approx(((est - truth) ** 2).mean(), abs=1e-12)

    def test_imputation_order_invariant(self):
        series = generate_synthetic(10, 5, 4, 0.3, seed=4)
        grid = bin_to_grid(series, 1.0, 5.0)
        removed, record = remove_values(grid, 0.15, seed=1)
        norm, stats = normalize(removed)
        model, _ = train(norm, TrainConfig(**{**TINY, "epochs": 2}))
        forward = evaluate_imputation(model, norm, record, stats)
        record.entries = record.entries[::-1]
        assert evaluate_imputation(model, norm, record, stats) == forward

    def test_imputation_empty_record_rejected(self, tiny_batch):
        model, _ = train(tiny_batch, TrainConfig(**TINY))
        from vrin.data import NormalizationStats, RemovalRecord
        stats = NormalizationStats(np.zeros(4), np.ones(4))
        with pytest.raises(ValueError, match="non-empty"):
            evaluate_imputation(model, tiny_batch, RemovalRecord([]), stats)

    def test_mean_copy_model_equals_mean_fill_baseline(self):
        """A predictor that emits each variable's mean scores exactly like
        the mean-fill baseline."""
        from vrin.baselines import fill, observed_means
        from vrin.metrics import imputation_metrics
        series = generate_synthetic(10, 5, 4, 0.3, seed=6)
        grid = bin_to_grid(series, 1.0, 5.0)
        removed, record = remove_values(grid, 0.2, seed=2)
        means = observed_means(removed)
        filled = fill(removed, "mean", means)
        pos = record.positions()
        baseline = imputation_metrics(record.true_values(),
                                      filled[pos[:, 0], pos[:, 1], pos[:, 2]])
        # normalized space: the mean estimate is exactly 0, de-normalizing
        # it reproduces the per-variable training mean
        norm, stats = normalize(removed)
        est = np.zeros(len(record)) * stats.std[pos[:, 2]] + stats.mean[pos[:, 2]]
        manual = imputation_metrics(record.true_values(), est)
        assert manual == pytest.approx(baseline, rel=1e-12)


class TestCrossvalidate:
    def test_classification_folds_aggregate(self):
        series = generate_synthetic(30, 5, 4, 0.4, positive_rate=0.4, seed=7)
        grid = bin_to_grid(series, 1.0, 5.0)
        result = crossvalidate(grid, TrainConfig(**TINY), k=3, task="classification")
        assert set(result) == {"auc", "auprc"}
        assert len(result["auc"]["values"]) == 3
        assert "±" in result["auc"]["formatted"]

    def test_imputation_folds_aggregate(self):
        series = generate_synthetic(24, 5, 4, 0.4, seed=8)
        grid = bin_to_grid(series, 1.0, 5.0)
        result = crossvalidate(grid, TrainConfig(**TINY), k=3, task="imputation",
                               removal_fraction=0.1)
        assert set(result) == {"mae", "mre", "mse"}
        assert all(len(v["values"]) == 3 for v in result.values())

    def test_bad_arguments(self):
        series = generate_synthetic(10, 5, 4, 0.4, seed=9)
        grid = bin_to_grid(series, 1.0, 5.0)
        with pytest.raises(ValueError):
            crossvalidate(grid, TrainConfig(**TINY), k=1)
        with pytest.raises(ValueError):
            crossvalidate(grid, TrainConfig(**TINY), k=2, task="imputation")


def test_format_mean_std():
    assert format_mean_std([0.8347, 0.8347]) == "0.8347 ± 0.0000"
    out = format_mean_std([0.82, 0.85, 0.84])
    assert "±" in out and out.startswith("0.8")
    assert format_mean_std([0.5]) == "0.5000 ± 0.0000"
