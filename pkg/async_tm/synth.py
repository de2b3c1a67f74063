from __future__ import annotations

import logging
from typing import Tuple

import numpy as np

from .exceptions import InvalidConfigException

LOGGER = logging.getLogger(__name__)

Dataset = Tuple[np.ndarray, np.ndarray]


def _check_noise(noise_rate: float):
    if not 0.0 <= noise_rate < 0.5:
        raise InvalidConfigException(
            "noise rate must lie in [0, 0.5), got {}".format(noise_rate)
        )


def xor_labels(X: np.ndarray) -> np.ndarray:
    return np.bitwise_xor(X[:, 0], X[:, 1]).astype(np.int64)


def synth_xor(
    q: int, noise_rate: float = 0.0, seed: int | np.random.SeedSequence = 1
) -> Dataset:
    """q uniform draws over {0,1}^2 labelled x1 xor x2, labels flipped at noise_rate."""
    _check_noise(noise_rate)
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 2, size=(q, 2), dtype=np.uint8)
    y = xor_labels(X)
    flips = rng.random(q) < noise_rate
    y[flips] = 1 - y[flips]
    LOGGER.debug("xor: %d examples, %d labels flipped", q, int(flips.sum()))
    return X, y


def xor_grid(copies: int) -> Dataset:
    """Each of the four XOR patterns repeated `copies` times, noise free."""
    patterns = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=np.uint8)
    X = np.repeat(patterns, copies, axis=0)
    return X, xor_labels(X)


def synth_xor_split(
    q_train: int, q_test: int, noise_rate: float = 0.0, seed: int = 1
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Noisy training pool plus a noise-free test split from the same seed."""
    seeds = np.random.SeedSequence(seed).spawn(2)
    X_train, y_train = synth_xor(q_train, noise_rate, seed=seeds[0])
    X_test, y_test = synth_xor(q_test, 0.0, seed=seeds[1])
    return X_train, y_train, X_test, y_test


def _code_bits(classes: int) -> int:
    return max(1, int(np.ceil(np.log2(classes))))


def synth_clause_patterns(
    q: int,
    features: int = 20,
    classes: int = 4,
    noise_rate: float = 0.0,
    seed: int = 1,
) -> Dataset:
    """Classes defined by conjunctions over a few features among random noise.

    Class c fixes the leading code bits to the binary form of c, sets one
    marker feature and clears another; the remaining features are uniform.
    A noisy label moves to a uniformly drawn other class.
    """
    _check_noise(noise_rate)
    if classes < 2:
        raise InvalidConfigException("need at least 2 classes, got {}".format(classes))
    code = _code_bits(classes)
    if features < code + 2 * classes:
        raise InvalidConfigException(
            "{} classes need at least {} features".format(classes, code + 2 * classes)
        )

    rng = np.random.default_rng(seed)
    y = rng.integers(0, classes, size=q).astype(np.int64)
    X = rng.integers(0, 2, size=(q, features), dtype=np.uint8)
    for bit in range(code):
        X[:, bit] = (y >> bit) & 1
    rows = np.arange(q)
    X[rows, code + y] = 1
    X[rows, code + classes + y] = 0

    flips = rng.random(q) < noise_rate
    shift = rng.integers(1, classes, size=q)
    y = np.where(flips, (y + shift) % classes, y)
    LOGGER.debug(
        "clause patterns: %d examples, %d features, %d classes", q, features, classes
    )
    return X, y


def synth_staircase(q: int, o: int = 6, seed: int = 1) -> Dataset:
    """Uniform bit vectors with the number of set bits as the target."""
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 2, size=(q, o), dtype=np.uint8)
    return X, X.sum(axis=1).astype(np.float64)
