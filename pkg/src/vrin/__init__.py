"""Uncertainty-aware variational-recurrent imputation for sparse time series."""

from .config import TrainConfig, classification_preset, imputation_preset
from .data import (IrregularSeries, MaskedBatch, NormalizationStats, RemovalRecord,
                   bin_to_grid, build_delta, generate_synthetic, kfold_split,
                   load_dataset, normalize, remove_values, save_dataset)
from .estimator import VariationalRecurrentImputer
from .model import ImputationOutputs, VrinModel
from .training import (RunReport, crossvalidate, evaluate_classification,
                       evaluate_imputation, train)

__version__ = "0.1.0"

__all__ = [
    "TrainConfig", "classification_preset", "imputation_preset",
    "IrregularSeries", "MaskedBatch", "NormalizationStats", "RemovalRecord",
    "bin_to_grid", "build_delta", "generate_synthetic", "kfold_split",
    "load_dataset", "normalize", "remove_values", "save_dataset",
    "VariationalRecurrentImputer", "ImputationOutputs", "VrinModel",
    "RunReport", "crossvalidate", "evaluate_classification",
    "evaluate_imputation", "train",
    "__version__",
]
