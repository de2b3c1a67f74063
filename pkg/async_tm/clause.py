from __future__ import annotations

import logging
from enum import Enum
from typing import Iterator, List, NamedTuple, Sequence

import numpy as np

from .automaton import DEFAULT_DEPTH
from .exceptions import DatasetSchemaException

LOGGER = logging.getLogger(__name__)


class Mode(Enum):
    TRAIN = 1
    PREDICT = 2


class Polarity(Enum):
    NEGATIVE = -1
    POSITIVE = 1


def pack_bits(bits: np.ndarray) -> int:
    """Little-endian bit packing: element k becomes bit k of the result."""
    packed = np.packbits(np.asarray(bits, dtype=np.uint8), bitorder="little")
    return int.from_bytes(packed.tobytes(), "little")


class Literals(NamedTuple):
    # x_1..x_o followed by their negations
    bits: np.ndarray
    mask: int


class LiteralMatrix(NamedTuple):
    bits: np.ndarray
    rows: List[Literals]


def encode_literals(X: Sequence[int] | np.ndarray) -> Literals:
    features = np.asarray(X, dtype=np.uint8)
    if features.ndim != 1:
        raise DatasetSchemaException(
            "expected a bit vector, got shape {}".format(features.shape)
        )
    bits = np.concatenate((features, 1 - features)).astype(np.uint8)
    return Literals(bits=bits, mask=pack_bits(bits))


def literal_bits(X: np.ndarray) -> np.ndarray:
    """Literal bit matrix of a feature matrix, one row per example."""
    features = np.asarray(X, dtype=np.uint8)
    if features.ndim != 2:
        raise DatasetSchemaException(
            "expected a bit matrix, got shape {}".format(features.shape)
        )
    return np.ascontiguousarray(
        np.concatenate((features, 1 - features), axis=1).astype(np.uint8)
    )


def encode_literal_matrix(X: np.ndarray) -> LiteralMatrix:
    bits = literal_bits(X)
    rows = [Literals(bits=row, mask=pack_bits(row)) for row in bits]
    return LiteralMatrix(bits=bits, rows=rows)


NO_LITERALS = np.empty(0, dtype=np.intp)


class ClauseCheckpoint(NamedTuple):
    states: np.ndarray
    outputs: bytes
    version: int


def literal_value(X: Sequence[int] | np.ndarray, k: int) -> int:
    """Value of literal k (1-based) for feature vector X."""
    o = len(X)
    if not 1 <= k <= 2 * o:
        raise IndexError("literal index {} outside [1, {}]".format(k, 2 * o))
    if k <= o:
        return int(X[k - 1])
    return 1 - int(X[k - o - 1])


class OutputBitmap:
    """One bit per pool example holding a clause's last recorded output."""

    __slots__ = ("size", "_bytes")

    def __init__(self, size: int):
        self.size = size
        self._bytes = bytearray((size + 7) // 8)

    def __len__(self) -> int:
        return self.size

    def _check(self, i: int):
        if not 0 <= i < self.size:
            raise IndexError("example index {} outside [0, {})".format(i, self.size))

    def get(self, i: int) -> int:
        self._check(i)
        return (self._bytes[i >> 3] >> (i & 7)) & 1

    def set(self, i: int, bit: int):
        self._check(i)
        if bit:
            self._bytes[i >> 3] |= 1 << (i & 7)
        else:
            self._bytes[i >> 3] &= ~(1 << (i & 7)) & 0xFF

    def assign(self, bits: np.ndarray):
        if len(bits) != self.size:
            raise DatasetSchemaException(
                "bitmap holds {} examples, got {}".format(self.size, len(bits))
            )
        self._bytes = bytearray(
            np.packbits(np.asarray(bits, dtype=np.uint8), bitorder="little").tobytes()
        )

    def to_bits(self) -> np.ndarray:
        return np.unpackbits(
            np.frombuffer(bytes(self._bytes), dtype=np.uint8),
            bitorder="little",
            count=self.size,
        )

    @property
    def nbytes(self) -> int:
        return len(self._bytes)


class Clause:
    def __init__(
        self,
        polarity: Polarity,
        number_of_features: int,
        pool_size: int = 0,
        depth: int = DEFAULT_DEPTH,
    ):
        self.polarity = polarity
        self.depth = depth
        self.number_of_features = number_of_features
        self.states = np.full(2 * number_of_features, depth, dtype=np.int32)
        self.prev_output = OutputBitmap(pool_size)
        # bumped whenever feedback moves a counter
        self.version = 0
        # both views of states > depth, kept in step by shift() and sync()
        self.include = np.zeros(2 * number_of_features, dtype=bool)
        self._include_mask = 0

    @property
    def sign(self) -> int:
        return self.polarity.value

    @property
    def include_mask(self) -> int:
        return self._include_mask

    @property
    def number_of_literals(self) -> int:
        return self.states.shape[0]

    def sync(self):
        """Recompute the include vector and mask from the counters."""
        self.include = self.states > self.depth
        self._include_mask = pack_bits(self.include)

    def fires(self, literals: Literals) -> bool:
        # training-mode output: an empty mask always passes
        return (self._include_mask & ~literals.mask) == 0

    def shift(self, up: np.ndarray, down: np.ndarray) -> bool:
        """Step the counters at `up` toward Include and at `down` toward
        Exclude, saturating at the ends. Returns whether any counter moved.

        Only literals whose counter crosses the depth touch the include
        vector and mask.
        """
        states = self.states
        if up.size:
            up = up[states[up] < 2 * self.depth]
            states[up] += 1
        if down.size:
            down = down[states[down] > 1]
            states[down] -= 1
        if not (up.size or down.size):
            return False
        self.version += 1
        gained = up[states[up] == self.depth + 1]
        lost = down[states[down] == self.depth]
        if gained.size or lost.size:
            self.include[gained] = True
            self.include[lost] = False
            mask = self._include_mask
            for k in gained.tolist():
                mask |= 1 << k
            for k in lost.tolist():
                mask &= ~(1 << k)
            self._include_mask = mask
        return True

    def checkpoint(self) -> ClauseCheckpoint:
        return ClauseCheckpoint(
            self.states.copy(), bytes(self.prev_output._bytes), self.version
        )

    def restore(self, checkpoint: ClauseCheckpoint):
        """Adopt the state a worker process trained this clause into."""
        self.load_states(checkpoint.states)
        if len(checkpoint.outputs) != self.prev_output.nbytes:
            raise DatasetSchemaException(
                "output bitmap holds {} bytes, got {}".format(
                    self.prev_output.nbytes, len(checkpoint.outputs)
                )
            )
        self.prev_output._bytes = bytearray(checkpoint.outputs)
        self.version = checkpoint.version

    def load_states(self, counters: Sequence[int] | np.ndarray):
        counters = np.asarray(counters, dtype=np.int32)
        if counters.shape != self.states.shape:
            raise DatasetSchemaException(
                "clause has {} automata, got {}".format(
                    self.states.shape[0], counters.shape[0]
                )
            )
        if counters.min() < 1 or counters.max() > 2 * self.depth:
            raise DatasetSchemaException(
                "counters must lie in [1, {}]".format(2 * self.depth)
            )
        self.states[:] = counters
        self.sync()

    def attach(self, pool_size: int):
        self.prev_output = OutputBitmap(pool_size)

    @property
    def include_count(self) -> int:
        return int(np.count_nonzero(self.include))

    def included_literals(self) -> List[int]:
        return [int(k) + 1 for k in np.flatnonzero(self.include)]

    def evaluate_many(self, literal_bits: np.ndarray, mode: Mode) -> np.ndarray:
        include = self.include.astype(np.int32)
        if not include.any():
            fill = 1 if mode is Mode.TRAIN else 0
            return np.full(literal_bits.shape[0], fill, dtype=np.uint8)
        violations = (1 - literal_bits.astype(np.int32)) @ include
        return (violations == 0).astype(np.uint8)

    def describe(self) -> str:
        o = self.number_of_features
        names = []
        for k in self.included_literals():
            names.append("x{}".format(k) if k <= o else "¬x{}".format(k - o))
        return " ∧ ".join(names) if names else "∅"


def evaluate_clause(
    clause: Clause, X: Literals | Sequence[int] | np.ndarray, mode: Mode
) -> int:
    literals = X if isinstance(X, Literals) else encode_literals(X)
    include = clause.include_mask
    if include == 0:
        # empty clauses fire only while training
        return 1 if mode is Mode.TRAIN else 0
    return int((include & ~literals.mask) == 0)


class ClassBank:
    def __init__(self, clauses: List[Clause]):
        self.clauses = clauses

    @classmethod
    def create(
        cls,
        number_of_clauses: int,
        number_of_features: int,
        pool_size: int = 0,
        depth: int = DEFAULT_DEPTH,
        all_positive: bool = False,
    ) -> ClassBank:
        clauses = []
        for j in range(number_of_clauses):
            # 1-based odd indexes vote for the class
            if all_positive or j % 2 == 0:
                polarity = Polarity.POSITIVE
            else:
                polarity = Polarity.NEGATIVE
            clauses.append(Clause(polarity, number_of_features, pool_size, depth))
        return cls(clauses)

    def __len__(self) -> int:
        return len(self.clauses)

    def __iter__(self) -> Iterator[Clause]:
        return iter(self.clauses)

    def __getitem__(self, j: int) -> Clause:
        return self.clauses[j]

    @property
    def number_of_features(self) -> int:
        return self.clauses[0].number_of_features if self.clauses else 0

    def signs(self) -> np.ndarray:
        return np.array([c.sign for c in self.clauses], dtype=np.int32)

    def attach(self, pool_size: int):
        for clause in self.clauses:
            clause.attach(pool_size)

    def outputs(self, literals: Literals, mode: Mode) -> List[int]:
        return [evaluate_clause(c, literals, mode) for c in self.clauses]

    def vote_sum(self, literals: Literals, mode: Mode) -> int:
        if mode is Mode.PREDICT:
            return sum(
                c.sign for c in self.clauses if evaluate_clause(c, literals, mode)
            )
        unmet = ~literals.mask
        v = 0
        for clause in self.clauses:
            if (clause._include_mask & unmet) == 0:
                v += clause.sign
        return v

    def include_matrix(self) -> np.ndarray:
        if not self.clauses:
            return np.zeros((0, 0), dtype=bool)
        return np.stack([c.include for c in self.clauses])

    def vote_sums(self, literal_bits: np.ndarray, mode: Mode) -> np.ndarray:
        """Signed vote sum for every row of a literal bit matrix at once."""
        if not self.clauses:
            return np.zeros(literal_bits.shape[0], dtype=np.int64)
        include = self.include_matrix().astype(np.int32)
        violations = include @ (1 - literal_bits.astype(np.int32)).T
        fired = violations == 0
        if mode is Mode.PREDICT:
            fired &= include.any(axis=1)[:, np.newaxis]
        return self.signs().astype(np.int64) @ fired.astype(np.int64)

    def describe(self) -> List[str]:
        rows = []
        for j, clause in enumerate(self.clauses, start=1):
            sign = "+" if clause.sign > 0 else "-"
            rows.append(
                "C{} ({}, {} literals): {}".format(
                    j, sign, clause.include_count, clause.describe()
                )
            )
        return rows
