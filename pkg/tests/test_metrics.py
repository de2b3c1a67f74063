import pytest

from async_tm.exceptions import MetricsException
from async_tm.metrics import (
    CLASSIFY,
    REGRESS,
    accuracy,
    macro_f1,
    mean_absolute_error,
    metrics,
)


def test_mean_absolute_error():
    assert mean_absolute_error([1.0, 3.0], [2.0, 2.0]) == 1.0


def test_accuracy():
    assert accuracy([0, 1, 1, 0], [0, 1, 0, 0]) == 0.75
    assert accuracy([1, 1], [0, 0]) == 0.0


def test_macro_f1_perfect():
    assert macro_f1([0, 1, 2], [0, 1, 2]) == 1.0


def test_empty_input():
    with pytest.raises(MetricsException):
        accuracy([], [])
    with pytest.raises(MetricsException):
        mean_absolute_error([], [])


def test_length_mismatch():
    with pytest.raises(MetricsException):
        accuracy([0, 1], [0])


def test_metrics_by_task():
    assert set(metrics([0, 1], [0, 1], CLASSIFY)) == {"accuracy", "macro_f1"}
    assert metrics([1.0], [1.5], REGRESS) == {"mae": 0.5}
    with pytest.raises(MetricsException):
        metrics([0], [0], "cluster")
