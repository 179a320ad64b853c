"""Evaluation metrics: imputation error and ranking quality."""

from __future__ import annotations

import numpy as np


def imputation_metrics(truth, estimates) -> tuple[float, float, float]:
    """(MAE, MRE, MSE) over ground-truth / estimate pairs.

    MAE and MSE average absolute and squared error over the pairs; MRE
    divides total absolute error by total absolute ground truth. A zero
    MRE denominator is only valid when the numerator is also zero.
    """
    truth = np.asarray(truth, dtype=np.float64).ravel()
    estimates = np.asarray(estimates, dtype=np.float64).ravel()
    if truth.size == 0:
        raise ValueError("imputation metrics need at least one ground-truth entry")
    if truth.shape != estimates.shape:
        raise ValueError(f"truth and estimates differ in length: {truth.size} vs {estimates.size}")
    abs_err = np.abs(estimates - truth)
    mae = float(abs_err.mean())
    mse = float((abs_err ** 2).mean())
    denom = float(np.abs(truth).sum())
    if denom == 0.0:
        if float(abs_err.sum()) == 0.0:
            mre = 0.0
        else:
            raise ZeroDivisionError("MRE undefined: zero ground-truth magnitude, nonzero error")
    else:
        mre = float(abs_err.sum() / denom)
    return mae, mre, mse


def roc_auc(scores, labels) -> float:
    """Probability a positive outranks a negative, ties counted half.

    Computed from average ranks, which matches the pairwise statistic
    exactly.
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel().astype(int)
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC undefined: labels must contain both classes")

    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0  # average 1-based rank
        i = j + 1

    pos_rank_sum = ranks[labels == 1].sum()
    return float((pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def average_precision(scores, labels) -> float:
    """Area under the precision-recall curve, non-interpolated.

    Precision is evaluated at each distinct score threshold and weighted
    by the recall increment it brings.
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel().astype(int)
    n_pos = int((labels == 1).sum())
    if n_pos == 0:
        raise ValueError("AUPRC undefined: no positive labels")

    order = np.argsort(-scores, kind="mergesort")
    sorted_scores = scores[order]
    sorted_labels = labels[order]

    ap = 0.0
    tp = 0
    seen = 0
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        tp_group = int(sorted_labels[i:j + 1].sum())
        tp += tp_group
        seen = j + 1
        if tp_group:
            precision = tp / seen
            ap += precision * (tp_group / n_pos)
        i = j + 1
    return float(ap)
