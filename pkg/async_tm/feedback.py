from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Sequence

import numpy as np

from .clause import (
    NO_LITERALS,
    ClassBank,
    Clause,
    Literals,
    Mode,
    Polarity,
    encode_literals,
)

LOGGER = logging.getLogger(__name__)


class FeedbackType(Enum):
    TYPE_I = 1
    TYPE_II = 2


class FeedbackRng:
    """Seedable counter-based stream (Philox); one per worker."""

    def __init__(self, seed: int | Sequence[int] | np.random.SeedSequence):
        if isinstance(seed, np.random.SeedSequence):
            self._seed_seq = seed
        else:
            self._seed_seq = np.random.SeedSequence(seed)
        self._generator = np.random.Generator(np.random.Philox(self._seed_seq))

    def uniform(self) -> float:
        return float(self._generator.random())

    def uniforms(self, size: int) -> np.ndarray:
        return self._generator.random(size)

    def integers(self, high: int) -> int:
        return int(self._generator.integers(high))

    def permutation(self, size: int) -> np.ndarray:
        return self._generator.permutation(size)

    def spawn(self, count: int) -> List[FeedbackRng]:
        return [FeedbackRng(child) for child in self._seed_seq.spawn(count)]


@dataclass
class FeedbackStats:
    type_i: int = 0
    type_ii: int = 0
    skipped: int = 0

    @property
    def events(self) -> int:
        return self.type_i + self.type_ii

    def merge(self, other: FeedbackStats) -> FeedbackStats:
        self.type_i += other.type_i
        self.type_ii += other.type_ii
        self.skipped += other.skipped
        return self


def clause_update_probability(v: int, y: int, margin: int) -> float:
    clipped = max(-margin, min(margin, v))
    error = margin - clipped if y == 1 else margin + clipped
    return error / (2.0 * margin)


def type_i_feedback(
    clause: Clause,
    X: Literals | Sequence[int] | np.ndarray,
    s: float,
    boost: bool,
    rng: FeedbackRng,
) -> Clause:
    literals = X if isinstance(X, Literals) else encode_literals(X)
    draws = rng.uniforms(clause.number_of_literals)
    weak = draws < 1.0 / s
    if clause.fires(literals):
        # literal bits are 0/1 bytes
        truth = literals.bits.view(np.bool_)
        strong = draws < (s - 1.0) / s
        if boost:
            strong |= clause.include
        clause.shift(np.flatnonzero(strong & truth), np.flatnonzero(weak & ~truth))
    else:
        clause.shift(NO_LITERALS, np.flatnonzero(weak))
    return clause


def type_ii_feedback(
    clause: Clause, X: Literals | Sequence[int] | np.ndarray
) -> Clause:
    literals = X if isinstance(X, Literals) else encode_literals(X)
    if not clause.fires(literals):
        return clause
    # excluded literals that are false on X would silence the clause
    blockers = np.flatnonzero(~(literals.bits.view(np.bool_) | clause.include))
    clause.shift(blockers, NO_LITERALS)
    return clause


class MarginPolicy:
    """Gate shared by both heads.

    Each label maps to a goal vote sum. The clipped vote sum v misses it by
    e = goal - clip(v), a clause is gated in with probability |e| / (2T), and
    a positive clause gets Type I when e > 0 and Type II when e < 0 (negative
    clauses the reverse). An exact hit gives no feedback.
    """

    lower = 0
    upper = 0

    def __init__(self, margin: int):
        self.margin = margin

    def goal(self, label: int) -> int:
        raise NotImplementedError

    def clip(self, v: int) -> int:
        return max(self.lower, min(self.upper, v))

    def error(self, label: int, v: int) -> int:
        return self.goal(label) - self.clip(v)

    def probability(self, label: int, v: int) -> float:
        return abs(self.error(label, v)) / (2.0 * self.margin)

    def feedback_type(self, error: int, polarity: Polarity) -> FeedbackType | None:
        if error == 0:
            return None
        if (error > 0) == (polarity is Polarity.POSITIVE):
            return FeedbackType.TYPE_I
        return FeedbackType.TYPE_II


class ClassificationPolicy(MarginPolicy):
    """Margin gate for one class bank; y' xor p picks the feedback type."""

    def __init__(self, class_index: int, margin: int, single_bank: bool = False):
        super().__init__(margin)
        self.class_index = class_index
        self.single_bank = single_bank
        self.lower = -margin
        self.upper = margin

    def target(self, label: int) -> int:
        if self.single_bank:
            return label
        return int(label == self.class_index)

    def goal(self, label: int) -> int:
        return self.margin if self.target(label) == 1 else -self.margin

    def probability(self, label: int, v: int) -> float:
        return clause_update_probability(v, self.target(label), self.margin)

    def goals(self, labels: np.ndarray) -> np.ndarray:
        labels = np.asarray(labels)
        hit = labels == 1 if self.single_bank else labels == self.class_index
        return np.where(hit, self.margin, -self.margin).astype(np.int64)


class RegressionPolicy(MarginPolicy):
    """Error-proportional gate against a scaled target in [0, T]."""

    def __init__(self, margin: int):
        super().__init__(margin)
        self.upper = margin

    def goal(self, label: int) -> int:
        return label

    def goals(self, labels: np.ndarray) -> np.ndarray:
        return np.asarray(labels, dtype=np.int64)

    def probability(self, label: int, v: int) -> float:
        return min(1.0, super().probability(label, v))


def bank_feedback(
    bank: ClassBank,
    literals: Literals,
    label: int,
    policy: MarginPolicy,
    s: float,
    boost: bool,
    rng: FeedbackRng,
    stats: FeedbackStats,
) -> int:
    """Give every clause of a bank its gated feedback for one example.

    The vote sum is computed fresh before any clause changes. One uniform
    per clause decides the gate. Returns the vote sum used.
    """
    v = bank.vote_sum(literals, Mode.TRAIN)
    error = policy.error(label, v)
    if error == 0:
        stats.skipped += len(bank)
        return v
    gated = np.flatnonzero(rng.uniforms(len(bank)) < policy.probability(label, v))
    stats.skipped += len(bank) - gated.size
    for j in gated.tolist():
        clause = bank.clauses[j]
        if policy.feedback_type(error, clause.polarity) is FeedbackType.TYPE_I:
            type_i_feedback(clause, literals, s, boost, rng)
            stats.type_i += 1
        else:
            type_ii_feedback(clause, literals)
            stats.type_ii += 1
    return v
