from __future__ import annotations

from typing import Dict, Sequence, Tuple

import numpy as np
from sklearn import metrics as sk_metrics

from .exceptions import MetricsException

CLASSIFY = "classify"
REGRESS = "regress"


def _checked(predictions, truths) -> Tuple[np.ndarray, np.ndarray]:
    predictions = np.asarray(predictions)
    truths = np.asarray(truths)
    if predictions.shape[0] == 0 or truths.shape[0] == 0:
        raise MetricsException("metrics need at least one prediction")
    if predictions.shape != truths.shape:
        raise MetricsException(
            "{} predictions for {} truths".format(predictions.shape[0], truths.shape[0])
        )
    return predictions, truths


def accuracy(predictions: Sequence[int], truths: Sequence[int]) -> float:
    predictions, truths = _checked(predictions, truths)
    return float(sk_metrics.accuracy_score(truths, predictions))


def macro_f1(predictions: Sequence[int], truths: Sequence[int]) -> float:
    predictions, truths = _checked(predictions, truths)
    return float(
        sk_metrics.f1_score(truths, predictions, average="macro", zero_division=0)
    )


def mean_absolute_error(
    predictions: Sequence[float], truths: Sequence[float]
) -> float:
    predictions, truths = _checked(predictions, truths)
    return float(sk_metrics.mean_absolute_error(truths, predictions))


def metrics(predictions, truths, task: str) -> Dict[str, float]:
    if task == CLASSIFY:
        return {
            "accuracy": accuracy(predictions, truths),
            "macro_f1": macro_f1(predictions, truths),
        }
    if task == REGRESS:
        return {"mae": mean_absolute_error(predictions, truths)}
    raise MetricsException("unknown task: {}".format(task))
