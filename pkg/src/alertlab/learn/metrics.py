"""Classification metrics with explicit absence semantics.

Precision is meaningless when nothing is predicted positive, recall when there
are no actual positives, and AUROC when only one class is present; in those
cases the functions return None rather than a misleading 0.
"""

from __future__ import annotations

import numpy as np


def tied_ranks(values) -> np.ndarray:
    """1-based ranks, ties replaced by the mean rank of their group."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        # Mean of ranks i+1 .. j+1.
        ranks[order[i : j + 1]] = (i + j + 2) / 2.0
        i = j + 1
    return ranks


def auroc(predictions, labels) -> float | None:
    """Rank-based AUROC: the Mann-Whitney statistic.

    Equals (#concordant pairs + 0.5 * #tied pairs) / (P * N).  None when the
    labels are single-class.
    """
    predictions = np.asarray(predictions, dtype=np.float64)
    labels = np.asarray(labels)
    positive = labels == 1
    n_pos = int(positive.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = tied_ranks(predictions)
    rank_sum = float(ranks[positive].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def precision(predicted, labels) -> float | None:
    predicted = np.asarray(predicted)
    labels = np.asarray(labels)
    n_predicted_pos = int((predicted == 1).sum())
    if n_predicted_pos == 0:
        return None
    return float(((predicted == 1) & (labels == 1)).sum()) / n_predicted_pos


def recall(predicted, labels) -> float | None:
    predicted = np.asarray(predicted)
    labels = np.asarray(labels)
    n_actual_pos = int((labels == 1).sum())
    if n_actual_pos == 0:
        return None
    return float(((predicted == 1) & (labels == 1)).sum()) / n_actual_pos


def accuracy(predicted, labels) -> float:
    predicted = np.asarray(predicted)
    labels = np.asarray(labels)
    return float((predicted == labels).mean())


def binarize(probabilities, threshold: float = 0.5) -> np.ndarray:
    """Round probabilistic predictions to 0/1 at the given threshold."""
    return (np.asarray(probabilities, dtype=np.float64) >= threshold).astype(int)
