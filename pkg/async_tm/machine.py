from __future__ import annotations

import logging
from typing import List, Sequence, Tuple

import numpy as np

from .clause import ClassBank, Literals, Mode, encode_literals, literal_bits
from .config import TMConfig
from .exceptions import DatasetSchemaException, InvalidConfigException
from .feedback import (
    ClassificationPolicy,
    FeedbackRng,
    FeedbackStats,
    bank_feedback,
)
from .metrics import accuracy
from .pool import ExamplePool

LOGGER = logging.getLogger(__name__)


class MultiClassTM:
    task = "classify"
    metric_name = "accuracy"

    def __init__(
        self,
        config: TMConfig,
        number_of_features: int,
        number_of_classes: int,
        single_bank: bool = False,
    ):
        config.validate()
        if number_of_classes < 2:
            raise InvalidConfigException(
                "classification needs at least 2 classes, got {}".format(
                    number_of_classes
                )
            )
        if single_bank and number_of_classes != 2:
            raise InvalidConfigException("a single bank only models 2 classes")
        if number_of_features < 1:
            raise InvalidConfigException("at least one feature is required")

        self.config = config
        self.number_of_features = number_of_features
        self.number_of_classes = number_of_classes
        self.single_bank = single_bank

        number_of_banks = 1 if single_bank else number_of_classes
        self.banks: List[ClassBank] = [
            ClassBank.create(config.clauses, number_of_features, depth=config.depth)
            for _ in range(number_of_banks)
        ]
        self._policies = [
            ClassificationPolicy(c, config.margin, single_bank)
            for c in range(number_of_banks)
        ]

    def policy(self, class_index: int) -> ClassificationPolicy:
        return self._policies[class_index]

    def new_pool(self, X: np.ndarray, y: Sequence[int] | np.ndarray) -> ExamplePool:
        labels = np.asarray(y, dtype=np.int64)
        if labels.size and (labels.min() < 0 or labels.max() >= self.number_of_classes):
            raise DatasetSchemaException(
                "labels must lie in [0, {})".format(self.number_of_classes)
            )
        return ExamplePool(X, labels, number_of_tallies=len(self.banks))

    def sequential_step(
        self, pool: ExamplePool, i: int, rng: FeedbackRng, stats: FeedbackStats
    ):
        literals = pool.literals.rows[i]
        label = int(pool.y[i])
        if self.single_bank:
            self._train_bank(0, literals, label, rng, stats)
            return

        self._train_bank(label, literals, label, rng, stats)
        # one uniformly drawn non-target class receives y' = 0
        other = rng.integers(self.number_of_classes - 1)
        if other >= label:
            other += 1
        self._train_bank(other, literals, label, rng, stats)

    def _train_bank(
        self,
        class_index: int,
        literals: Literals,
        label: int,
        rng: FeedbackRng,
        stats: FeedbackStats,
    ):
        bank_feedback(
            self.banks[class_index],
            literals,
            label,
            self._policies[class_index],
            self.config.specificity,
            self.config.boost_true_positive,
            rng,
            stats,
        )

    def vote_sum_matrix(self, X: np.ndarray) -> np.ndarray:
        bits = literal_bits(np.atleast_2d(X))
        return np.stack(
            [bank.vote_sums(bits, Mode.PREDICT) for bank in self.banks],
            axis=1,
        )

    def predict(self, X: np.ndarray) -> np.ndarray:
        sums = self.vote_sum_matrix(X)
        if self.single_bank:
            return (sums[:, 0] >= 0).astype(np.int64)
        # argmax keeps the first maximum: ties go to the lowest class index
        return np.argmax(sums, axis=1).astype(np.int64)

    def score(self, X: np.ndarray, y: Sequence[int] | np.ndarray) -> Tuple[str, float]:
        return self.metric_name, accuracy(self.predict(X), y)

    def describe(self) -> List[str]:
        rows = []
        for class_index, bank in enumerate(self.banks):
            for line in bank.describe():
                rows.append("class {} {}".format(class_index, line))
        return rows


def export_vote_sums(tm: MultiClassTM, X: Sequence[int] | np.ndarray) -> np.ndarray:
    literals = encode_literals(X)
    return np.array(
        [bank.vote_sum(literals, Mode.PREDICT) for bank in tm.banks], dtype=np.int64
    )


def classify(tm: MultiClassTM, X: Sequence[int] | np.ndarray) -> int:
    sums = export_vote_sums(tm, X)
    if tm.single_bank:
        # unit step u(v): v >= 0 selects class 1
        return int(sums[0] >= 0)
    return int(np.argmax(sums))
