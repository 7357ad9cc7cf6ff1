"""Classification error measures."""

from __future__ import annotations

import warnings

import numpy as np


def error_rate(predictions: np.ndarray, labels: np.ndarray) -> float:
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape:
        raise ValueError("predictions and labels differ in length")
    if labels.size == 0:
        raise ValueError("cannot score an empty sample")
    return float(np.mean(predictions != labels))


def balanced_error_rate(predictions: np.ndarray, labels: np.ndarray, n_classes: int | None = None) -> float:
    """Mean over classes of the per-class error fraction.

    Classes listed by ``n_classes`` but absent from ``labels`` are left out of
    the mean with a warning.
    """
    predictions = np.asarray(predictions)
    labels = np.asarray(labels, dtype=np.int64)
    if predictions.shape != labels.shape:
        raise ValueError("predictions and labels differ in length")
    if labels.size == 0:
        raise ValueError("cannot score an empty sample")
    k = int(labels.max()) + 1 if n_classes is None else n_classes
    n = np.bincount(labels, minlength=k)
    e = np.bincount(labels[predictions != labels], minlength=k)
    present = n > 0
    if not present.all():
        missing = np.flatnonzero(~present).tolist()
        warnings.warn(f"classes {missing} have no samples and are left out of the BER", stacklevel=2)
    return float(np.mean(e[present] / n[present]))


METRICS = {"error": error_rate, "ber": balanced_error_rate}


def score(metric: str, predictions: np.ndarray, labels: np.ndarray, n_classes: int) -> float:
    if metric == "error":
        return error_rate(predictions, labels)
    if metric == "ber":
        return balanced_error_rate(predictions, labels, n_classes)
    raise ValueError(f"unknown metric {metric!r}")
