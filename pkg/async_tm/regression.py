from __future__ import annotations

import logging
from typing import List, Sequence, Tuple

import numpy as np

from .clause import ClassBank, Literals, Mode, encode_literals, literal_bits
from .config import TMConfig
from .exceptions import InvalidConfigException, TargetRangeException
from .feedback import FeedbackRng, FeedbackStats, RegressionPolicy, bank_feedback
from .metrics import mean_absolute_error
from .pool import ExamplePool

LOGGER = logging.getLogger(__name__)


class RegressionHead:
    """One bank of all-positive clauses decoded linearly over [0, T]."""

    task = "regress"
    metric_name = "mae"
    single_bank = True

    def __init__(
        self, config: TMConfig, number_of_features: int, y_min: float, y_max: float
    ):
        config.validate()
        if y_max < y_min:
            raise InvalidConfigException(
                "empty target range [{}, {}]".format(y_min, y_max)
            )
        if number_of_features < 1:
            raise InvalidConfigException("at least one feature is required")
        self.config = config
        self.number_of_features = number_of_features
        self.y_min = float(y_min)
        self.y_max = float(y_max)
        self.banks: List[ClassBank] = [
            ClassBank.create(
                config.clauses,
                number_of_features,
                depth=config.depth,
                all_positive=True,
            )
        ]
        self._policy = RegressionPolicy(config.margin)

    @property
    def bank(self) -> ClassBank:
        return self.banks[0]

    @property
    def margin(self) -> int:
        return self.config.margin

    def policy(self, class_index: int) -> RegressionPolicy:
        return self._policy

    def scale(self, y_target: float) -> int:
        if not self.y_min <= y_target <= self.y_max:
            raise TargetRangeException(
                "target {} outside [{}, {}]".format(y_target, self.y_min, self.y_max)
            )
        span = self.y_max - self.y_min
        if span == 0:
            return 0
        return int(round((y_target - self.y_min) * self.margin / span))

    def decode(self, v: int | np.ndarray):
        clipped = np.clip(v, 0, self.margin)
        return self.y_min + clipped * (self.y_max - self.y_min) / self.margin

    def new_pool(self, X: np.ndarray, y: Sequence[float] | np.ndarray) -> ExamplePool:
        return ExamplePool.for_regression(X, y, self.y_min, self.y_max, self.margin)

    def sequential_step(
        self, pool: ExamplePool, i: int, rng: FeedbackRng, stats: FeedbackStats
    ):
        _update_scaled(self, pool.literals.rows[i], int(pool.y[i]), rng, stats)

    def vote_sum_matrix(self, X: np.ndarray) -> np.ndarray:
        bits = literal_bits(np.atleast_2d(X))
        return self.bank.vote_sums(bits, Mode.PREDICT)[:, np.newaxis]

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.decode(self.vote_sum_matrix(X)[:, 0])

    def score(
        self, X: np.ndarray, y: Sequence[float] | np.ndarray
    ) -> Tuple[str, float]:
        return self.metric_name, mean_absolute_error(self.predict(X), y)

    def describe(self) -> List[str]:
        return self.bank.describe()


def predict_regress(head: RegressionHead, X: Sequence[int] | np.ndarray) -> float:
    v = head.bank.vote_sum(encode_literals(X), Mode.PREDICT)
    return float(head.decode(v))


def _update_scaled(
    head: RegressionHead,
    literals: Literals,
    target: int,
    rng: FeedbackRng,
    stats: FeedbackStats,
    specificity: float | None = None,
):
    s = head.config.specificity if specificity is None else specificity
    bank_feedback(
        head.bank,
        literals,
        target,
        head.policy(0),
        s,
        head.config.boost_true_positive,
        rng,
        stats,
    )


def update_regress(
    head: RegressionHead,
    X: Sequence[int] | np.ndarray,
    y_target: float,
    s: float,
    rng: FeedbackRng,
) -> FeedbackStats:
    target = head.scale(y_target)
    stats = FeedbackStats()
    _update_scaled(head, encode_literals(X), target, rng, stats, specificity=s)
    return stats


def predict_many(head: RegressionHead, X: np.ndarray) -> np.ndarray:
    return head.predict(X)
