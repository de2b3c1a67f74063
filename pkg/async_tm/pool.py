from __future__ import annotations

import contextlib
import logging
import os
import threading
import weakref
from multiprocessing import shared_memory
from typing import Any, List, Optional, Sequence, Tuple

import atomics
import numpy as np

from .clause import (
    ClassBank,
    Clause,
    Literals,
    Mode,
    encode_literal_matrix,
    encode_literals,
    evaluate_clause,
)
from .exceptions import (
    DatasetSchemaException,
    EmptyDatasetException,
    TargetRangeException,
)

LOGGER = logging.getLogger(__name__)


CELL_BYTES = 4


class _Segment:
    """A shared memory block, its int32 view and the atomic views into it."""

    def __init__(
        self,
        shm: shared_memory.SharedMemory,
        examples: int,
        classes: int,
        owner_pid: int | None,
    ):
        self.shm = shm
        self.owner_pid = owner_pid
        self.buffer = shm.buf[: examples * classes * CELL_BYTES]
        self.values = np.ndarray((examples, classes), dtype=np.intc, buffer=self.buffer)
        self.views: List[Optional[Any]] = [None] * (examples * classes)
        self.all_open = False
        self.stack = contextlib.ExitStack()

    def open_view(self, k: int):
        cell = self.buffer[k * CELL_BYTES : (k + 1) * CELL_BYTES]
        return self.stack.enter_context(
            atomics.atomicview(buffer=cell, atype=atomics.INT)
        )

    def release(self):
        self.stack.close()
        self.views = []
        self.values = None
        self.buffer = None
        try:
            self.shm.close()
        except BufferError:
            LOGGER.debug("tally block %s still mapped", self.shm.name)
        if self.owner_pid == os.getpid():
            self.shm.unlink()


class VoteTally:
    """q x m signed 32-bit cells in a shared memory block.

    Worker processes forked from the owner see the same cells. Adds are
    lock-free fetch-adds through `atomics` views; reads are aligned loads.
    """

    def __init__(self, examples: int, classes: int):
        shm = shared_memory.SharedMemory(
            create=True, size=examples * classes * CELL_BYTES
        )
        self._attach(examples, classes, shm, owner_pid=os.getpid())
        self.reset()

    def _attach(
        self,
        examples: int,
        classes: int,
        shm: shared_memory.SharedMemory,
        owner_pid: int | None,
    ):
        self.examples = examples
        self.classes = classes
        self._segment = _Segment(shm, examples, classes, owner_pid)
        self._lock = threading.Lock()
        weakref.finalize(self, self._segment.release)

    def __getstate__(self):
        return {
            "examples": self.examples,
            "classes": self.classes,
            "name": self._segment.shm.name,
        }

    def __setstate__(self, state):
        shm = shared_memory.SharedMemory(name=state["name"])
        self._attach(state["examples"], state["classes"], shm, owner_pid=None)

    @property
    def name(self) -> str:
        return self._segment.shm.name

    @property
    def values(self) -> np.ndarray:
        """Live (examples, classes) view of the cells."""
        return self._segment.values

    def _view(self, k: int):
        view = self._segment.views[k]
        if view is None:
            with self._lock:
                view = self._segment.views[k]
                if view is None:
                    view = self._segment.views[k] = self._segment.open_view(k)
        return view

    def open_views(self):
        """Create every atomic view now so forked workers inherit them."""
        if self._segment.all_open:
            return
        for k in range(self.examples * self.classes):
            self._view(k)
        self._segment.all_open = True

    def get(self, i: int, class_index: int) -> int:
        return int(self.values[i, class_index])

    def add(self, i: int, class_index: int, delta: int) -> int:
        return self._view(i * self.classes + class_index).fetch_add(delta) + delta

    # set, reset and assign expect no concurrent writers
    def set(self, i: int, class_index: int, value: int):
        self.values[i, class_index] = value

    def reset(self):
        self.values[:] = 0

    def assign(self, sums: np.ndarray):
        self.values[:] = sums

    def snapshot(self) -> np.ndarray:
        return self.values.astype(np.int64)


class ExamplePool:
    """Training triples (X_i, y_i, v_i). X and y are frozen after load."""

    def __init__(
        self,
        X: np.ndarray,
        y: Sequence[int] | np.ndarray,
        number_of_tallies: int,
        raw_targets: np.ndarray | None = None,
    ):
        X = np.asarray(X, dtype=np.uint8)
        if X.ndim != 2:
            raise DatasetSchemaException(
                "expected a 2-d bit matrix, got shape {}".format(X.shape)
            )
        if X.shape[0] == 0:
            raise EmptyDatasetException("example pool is empty")
        if np.any(X > 1):
            raise DatasetSchemaException("pool inputs must be 0/1")
        labels = np.asarray(y, dtype=np.int64)
        if labels.shape != (X.shape[0],):
            raise DatasetSchemaException(
                "{} labels for {} examples".format(labels.shape[0], X.shape[0])
            )

        self.X = X.copy()
        self.X.setflags(write=False)
        self.y = labels.copy()
        self.y.setflags(write=False)
        self.raw_targets = raw_targets
        self.literals = encode_literal_matrix(self.X)
        self.tallies = VoteTally(self.size, number_of_tallies)
        self._bound: Tuple[int, ...] = ()

        LOGGER.debug(
            "pool: %d examples, %d features, %d tallies per example",
            self.size,
            self.number_of_features,
            number_of_tallies,
        )

    @classmethod
    def for_regression(
        cls,
        X: np.ndarray,
        y: Sequence[float] | np.ndarray,
        y_min: float,
        y_max: float,
        margin: int,
    ) -> ExamplePool:
        targets = np.asarray(y, dtype=np.float64)
        if targets.size and (targets.min() < y_min or targets.max() > y_max):
            raise TargetRangeException(
                "targets span [{}, {}], outside [{}, {}]".format(
                    targets.min(), targets.max(), y_min, y_max
                )
            )
        return cls(
            X,
            scale_targets(targets, y_min, y_max, margin),
            number_of_tallies=1,
            raw_targets=targets,
        )

    @property
    def size(self) -> int:
        return self.X.shape[0]

    @property
    def number_of_features(self) -> int:
        return self.X.shape[1]

    @property
    def number_of_tallies(self) -> int:
        return self.tallies.classes

    def bind(self, banks: Sequence[ClassBank]) -> bool:
        """Attach the banks' output bitmaps to this pool, zeroing the tallies.

        Rebinding the same banks keeps the learned tallies; returns whether a
        fresh binding happened.
        """
        key = tuple(id(bank) for bank in banks)
        if key == self._bound:
            return False
        if len(banks) != self.number_of_tallies:
            raise DatasetSchemaException(
                "{} banks for {} tallies per example".format(
                    len(banks), self.number_of_tallies
                )
            )
        for bank in banks:
            if len(bank) and bank.number_of_features != self.number_of_features:
                raise DatasetSchemaException(
                    "bank expects {} features, pool has {}".format(
                        bank.number_of_features, self.number_of_features
                    )
                )
            bank.attach(self.size)
        self.tallies.reset()
        self._bound = key
        return True

    def tally_snapshot(self) -> np.ndarray:
        return self.tallies.snapshot()


def scale_targets(
    targets: np.ndarray, y_min: float, y_max: float, margin: int
) -> np.ndarray:
    span = y_max - y_min
    if span <= 0:
        return np.zeros(targets.shape[0], dtype=np.int64)
    return np.rint((targets - y_min) * margin / span).astype(np.int64)


def vote_sum(
    bank: ClassBank, X: Literals | Sequence[int] | np.ndarray, mode: Mode
) -> int:
    literals = X if isinstance(X, Literals) else encode_literals(X)
    return bank.vote_sum(literals, mode)


def record_output_and_tally(
    pool: ExamplePool, i: int, class_index: int, clause: Clause, o_new: int
) -> bool:
    if not 0 <= i < pool.size:
        raise IndexError("example index {} outside [0, {})".format(i, pool.size))
    if not 0 <= class_index < pool.number_of_tallies:
        raise IndexError(
            "class index {} outside [0, {})".format(class_index, pool.number_of_tallies)
        )

    previous = clause.prev_output.get(i)
    if o_new == previous:
        return False
    # negative clauses subtract so v_i stays the signed vote sum
    pool.tallies.add(i, class_index, clause.sign * (o_new - previous))
    clause.prev_output.set(i, o_new)
    return True


def refresh_tallies(pool: ExamplePool, banks: Sequence[ClassBank]):
    """Recompute every tally from scratch. No workers may be running."""
    pool.bind(banks)
    sums = np.zeros((pool.size, len(banks)), dtype=np.int64)
    for class_index, bank in enumerate(banks):
        for clause in bank:
            outputs = clause.evaluate_many(pool.literals.bits, Mode.TRAIN)
            clause.prev_output.assign(outputs)
            sums[:, class_index] += clause.sign * outputs.astype(np.int64)

    pool.tallies.assign(sums)
    LOGGER.debug("refreshed %d x %d tallies", pool.size, len(banks))


def delta_pass(pool: ExamplePool, banks: Sequence[ClassBank]) -> int:
    """One record_output_and_tally per (clause, example) with frozen clauses."""
    pool.bind(banks)
    writes = 0
    rows: List[Literals] = pool.literals.rows
    for class_index, bank in enumerate(banks):
        for clause in bank:
            for i, literals in enumerate(rows):
                o_new = evaluate_clause(clause, literals, Mode.TRAIN)
                if record_output_and_tally(pool, i, class_index, clause, o_new):
                    writes += 1
    return writes
