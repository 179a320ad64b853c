"""Scikit-learn style front end over the imputation-plus-prediction network.

``X`` is a dense ``(n_samples, n_steps, n_features)`` array with NaN at
missing positions. ``fit`` trains the joint network, ``transform``
returns completed sequences in the original units, ``predict`` /
``predict_proba`` give the binary outcome. Fitting without labels trains
the imputation objectives only.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .config import TrainConfig
from .data import denormalize_values, normalize
from .training import train
from .validation import batch_from_arrays, check_sequence_array


class VariationalRecurrentImputer(BaseEstimator, TransformerMixin):
    """Joint missing-value imputer and binary outcome classifier.

    Parameters mirror :class:`~vrin.config.TrainConfig`; see that class
    for semantics and valid ranges. ``random_state`` seeds initialization,
    dropout, latent noise, and shuffling independently.
    """

    def __init__(self, alpha: float = 1.0, beta: float = 0.75, xi: float = 0.1,
                 l1_weight: float = 1e-5, learning_rate: float = 0.005,
                 weight_decay: float = 1e-5, epochs: int = 100, batch_size: int = 64,
                 hidden_size: int = 64, latent_dim: int = 10,
                 encoder_sizes=(64, 24), dropout_rate: float = 0.1,
                 direction: str = "uni", variant: str = "v_rin_full",
                 window_hours: float = 1.0, precision: str = "float64",
                 likelihood_observed_only: bool = True, random_state: int = 0):
        self.alpha = alpha
        self.beta = beta
        self.xi = xi
        self.l1_weight = l1_weight
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.epochs = epochs
        self.batch_size = batch_size
        self.hidden_size = hidden_size
        self.latent_dim = latent_dim
        self.encoder_sizes = encoder_sizes
        self.dropout_rate = dropout_rate
        self.direction = direction
        self.variant = variant
        self.window_hours = window_hours
        self.precision = precision
        self.likelihood_observed_only = likelihood_observed_only
        self.random_state = random_state

    def _config(self, n_steps: int, n_features: int) -> TrainConfig:
        cfg = TrainConfig(
            alpha=self.alpha, beta=self.beta, xi=self.xi, l1_weight=self.l1_weight,
            learning_rate=self.learning_rate, weight_decay=self.weight_decay,
            epochs=self.epochs, batch_size=self.batch_size,
            hidden_size=self.hidden_size, latent_dim=self.latent_dim,
            encoder_sizes=tuple(self.encoder_sizes), dropout_rate=self.dropout_rate,
            direction=self.direction, variant=self.variant, seed=self.random_state,
            n_steps=n_steps, n_features=n_features, window_hours=self.window_hours,
            precision=self.precision,
            likelihood_observed_only=self.likelihood_observed_only)
        cfg.validate()
        return cfg

    def fit(self, X, y=None, timestamps=None):
        """Train on NaN-marked sequences; y may be omitted for imputation-only use."""
        batch = batch_from_arrays(X, y=y, timestamps=timestamps,
                                  window_hours=self.window_hours)
        self.config_ = self._config(batch.n_steps, batch.n_features)
        normalized, self.stats_ = normalize(batch)
        self.model_, self.report_ = train(normalized, self.config_,
                                          include_prediction=y is not None)
        self.n_features_in_ = batch.n_features
        self.n_steps_ = batch.n_steps
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise RuntimeError("estimator is not fitted; call fit first")

    def _as_batch(self, X, timestamps):
        self._check_fitted()
        X = check_sequence_array(X)
        if X.shape[1] != self.n_steps_ or X.shape[2] != self.n_features_in_:
            raise ValueError(
                f"X grid {X.shape[1:]} does not match the fitted grid "
                f"({self.n_steps_}, {self.n_features_in_})")
        batch = batch_from_arrays(X, timestamps=timestamps,
                                  window_hours=self.window_hours)
        normalized, _ = normalize(batch, self.stats_)
        return normalized

    def transform(self, X, timestamps=None) -> np.ndarray:
        """Completed sequences in original units; observed entries untouched."""
        batch = self._as_batch(X, timestamps)
        outputs = self.model_.impute(batch)
        completed = denormalize_values(outputs.completed, self.stats_)
        observed = batch.mask == 1.0
        return np.where(observed, np.nan_to_num(np.asarray(X, dtype=np.float64)), completed)

    def transform_with_uncertainty(self, X, timestamps=None):
        """(completed, uncertainty) in original units; uncertainty is 0 where observed."""
        batch = self._as_batch(X, timestamps)
        outputs = self.model_.impute(batch)
        completed = denormalize_values(outputs.completed, self.stats_)
        observed = batch.mask == 1.0
        completed = np.where(observed, np.nan_to_num(np.asarray(X, dtype=np.float64)),
                             completed)
        uncertainty = outputs.uncertainty * self.stats_.std[None, None, :]
        return completed, uncertainty

    def predict_proba(self, X, timestamps=None) -> np.ndarray:
        """Class probabilities, shape (n_samples, 2)."""
        batch = self._as_batch(X, timestamps)
        p = self.model_.predict_scores(batch)
        return np.column_stack([1.0 - p, p])

    def predict(self, X, timestamps=None) -> np.ndarray:
        return (self.predict_proba(X, timestamps)[:, 1] >= 0.5).astype(np.int64)

    def score(self, X, y, timestamps=None) -> float:
        """Area under the ROC curve on the given data."""
        from .metrics import roc_auc
        batch = self._as_batch(X, timestamps)
        return roc_auc(self.model_.predict_scores(batch), np.asarray(y))
