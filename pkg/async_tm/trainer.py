from __future__ import annotations

import logging
import multiprocessing
import queue
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Protocol, Sequence, Tuple

import numpy as np

from .clause import ClassBank, Clause, Mode, Polarity, evaluate_clause
from .config import TMConfig
from .feedback import (
    FeedbackRng,
    FeedbackStats,
    FeedbackType,
    type_i_feedback,
    type_ii_feedback,
)
from .pool import ExamplePool, record_output_and_tally, refresh_tallies

LOGGER = logging.getLogger(__name__)

SEQUENTIAL = "seq"
PARALLEL = "par"
MODES = (SEQUENTIAL, PARALLEL)

TALLY_BLOCK = 256
POLL_SECONDS = 0.5


class FeedbackPolicy(Protocol):
    margin: int
    lower: int
    upper: int

    def goals(self, labels: np.ndarray) -> np.ndarray:
        ...

    def feedback_type(self, error: int, polarity: Polarity) -> FeedbackType | None:
        ...


class TrainableModel(Protocol):
    config: TMConfig
    banks: List[ClassBank]
    task: str
    metric_name: str

    def policy(self, class_index: int) -> FeedbackPolicy:
        ...

    def sequential_step(
        self, pool: ExamplePool, i: int, rng: FeedbackRng, stats: FeedbackStats
    ):
        ...

    def score(self, X: np.ndarray, y: np.ndarray) -> Tuple[str, float]:
        ...


@dataclass
class EpochReport:
    epoch: int
    duration: float
    mode: str
    workers: int
    metric_name: str
    clause_changes: List[int]
    feedback: FeedbackStats = field(default_factory=FeedbackStats)
    train_metric: Optional[float] = None
    test_metric: Optional[float] = None

    def serialize(self):
        return {
            "epoch": self.epoch,
            "mode": self.mode,
            "workers": self.workers,
            "seconds": self.duration,
            "metric_name": self.metric_name,
            "train_metric": self.train_metric,
            "test_metric": self.test_metric,
            "type_i": self.feedback.type_i,
            "type_ii": self.feedback.type_ii,
            "skipped": self.feedback.skipped,
            "clause_changes": " ".join(str(c) for c in self.clause_changes),
        }


def update_clause(
    clause: Clause,
    pool: ExamplePool,
    class_index: int,
    b: int,
    policy: FeedbackPolicy,
    s: float,
    boost: bool,
    rng: FeedbackRng,
    order: Sequence[int] | np.ndarray | None = None,
    offset: int = 0,
    stats: FeedbackStats | None = None,
) -> FeedbackStats:
    """Run b steps of the clause-local update loop against the shared tallies.

    Examples are visited along `order` starting at `offset`, wrapping around.
    All b gate uniforms are drawn up front. Tallies are read a block at a
    time; a block never holds the same example twice, so a lone worker reads
    the same values as a step-by-step loop would.
    """
    if b < 1:
        raise ValueError("batch size must be >= 1, got {}".format(b))
    order = np.arange(pool.size) if order is None else np.asarray(order)
    if stats is None:
        stats = FeedbackStats()

    size = len(order)
    block = min(TALLY_BLOCK, size)
    goals = policy.goals(pool.y)
    tallies = pool.tallies.values[:, class_index]
    rows = pool.literals.rows
    gates = rng.uniforms(b) * (2 * policy.margin)

    type_i = type_ii = 0
    for start in range(0, b, block):
        steps = np.arange(start, min(start + block, b))
        examples = order[(offset + steps) % size]
        v = np.clip(tallies[examples], policy.lower, policy.upper)
        errors = goals[examples] - v
        for t in np.flatnonzero(gates[steps] < np.abs(errors)).tolist():
            i = int(examples[t])
            literals = rows[i]
            feedback = policy.feedback_type(int(errors[t]), clause.polarity)
            if feedback is FeedbackType.TYPE_I:
                type_i_feedback(clause, literals, s, boost, rng)
                type_i += 1
            else:
                type_ii_feedback(clause, literals)
                type_ii += 1
            o_new = evaluate_clause(clause, literals, Mode.TRAIN)
            record_output_and_tally(pool, i, class_index, clause, o_new)

    stats.type_i += type_i
    stats.type_ii += type_ii
    stats.skipped += b - type_i - type_ii
    return stats


def _versions(banks: Sequence[ClassBank]) -> List[List[int]]:
    return [[clause.version for clause in bank] for bank in banks]


def _changes(before: List[List[int]], banks: Sequence[ClassBank]) -> List[int]:
    return [
        sum(1 for old, clause in zip(versions, bank) if clause.version != old)
        for versions, bank in zip(before, banks)
    ]


def train_epoch_sequential(
    model: TrainableModel, pool: ExamplePool, rng: FeedbackRng, epoch: int = 0
) -> EpochReport:
    before = _versions(model.banks)
    stats = FeedbackStats()

    start = time.perf_counter()
    for i in rng.permutation(pool.size):
        model.sequential_step(pool, int(i), rng, stats)
    duration = time.perf_counter() - start

    return EpochReport(
        epoch=epoch,
        duration=duration,
        mode=SEQUENTIAL,
        workers=1,
        metric_name=model.metric_name,
        clause_changes=_changes(before, model.banks),
        feedback=stats,
    )


def partition_clauses(
    banks: Sequence[ClassBank], workers: int
) -> List[List[Tuple[int, int, int]]]:
    """Deal (class, clause) pairs round-robin over the workers.

    Each entry is (global clause index, class index, clause index).
    """
    pairs = [
        (class_index, j)
        for class_index, bank in enumerate(banks)
        for j in range(len(bank))
    ]
    shares: List[List[Tuple[int, int, int]]] = [[] for _ in range(workers)]
    for k, (class_index, j) in enumerate(pairs):
        shares[k % workers].append((k, class_index, j))
    return [share for share in shares if share]


def _train_share(
    model: TrainableModel,
    pool: ExamplePool,
    share: List[Tuple[int, int, int]],
    order: np.ndarray,
    rng: FeedbackRng,
    total: int,
) -> FeedbackStats:
    config = model.config
    stats = FeedbackStats()
    for k, class_index, j in share:
        update_clause(
            model.banks[class_index][j],
            pool,
            class_index,
            pool.size,
            model.policy(class_index),
            config.specificity,
            config.boost_true_positive,
            rng,
            order=order,
            # spread concurrent clauses over the pool
            offset=(k * pool.size) // total,
            stats=stats,
        )
    return stats


def _share_worker(
    w: int,
    model: TrainableModel,
    pool: ExamplePool,
    share: List[Tuple[int, int, int]],
    order: np.ndarray,
    rng: FeedbackRng,
    total: int,
    results,
):
    LOGGER.debug("worker %d: %d clauses", w, len(share))
    try:
        stats = _train_share(model, pool, share, order, rng, total)
        trained = [
            (class_index, j, model.banks[class_index][j].checkpoint())
            for _, class_index, j in share
        ]
    except Exception as e:
        results.put((w, None, None, e))
        return
    results.put((w, stats, trained, None))


def worker_context():
    # forked workers inherit the pool and the open tally views
    methods = multiprocessing.get_all_start_methods()
    return multiprocessing.get_context("fork" if "fork" in methods else "spawn")


def _collect(results, processes) -> dict:
    outcomes: dict = {}
    stalled = False
    while len(outcomes) < len(processes):
        try:
            w, stats, trained, error = results.get(timeout=POLL_SECONDS)
        except queue.Empty:
            silent = [
                w
                for w, process in enumerate(processes)
                if w not in outcomes and process.exitcode is not None
            ]
            if silent and stalled:
                raise RuntimeError(
                    "worker {} exited with code {} before reporting".format(
                        silent[0], processes[silent[0]].exitcode
                    )
                )
            stalled = bool(silent)
            continue
        outcomes[w] = (stats, trained, error)
    return outcomes


def _run_workers(
    model: TrainableModel,
    pool: ExamplePool,
    shares: List[List[Tuple[int, int, int]]],
    order: np.ndarray,
    streams: List[FeedbackRng],
    total: int,
) -> List[FeedbackStats]:
    context = worker_context()
    pool.tallies.open_views()
    results = context.Queue()
    processes = [
        context.Process(
            target=_share_worker,
            args=(w, model, pool, share, order, streams[w], total, results),
            daemon=True,
        )
        for w, share in enumerate(shares)
    ]
    for process in processes:
        process.start()
    try:
        outcomes = _collect(results, processes)
    finally:
        for process in processes:
            process.join(timeout=POLL_SECONDS)
            if process.is_alive():
                process.terminate()

    errors = [error for _, _, error in outcomes.values() if error is not None]
    if errors:
        LOGGER.error("%d of %d workers failed", len(errors), len(processes))
        raise errors[0]

    for w in range(len(shares)):
        _, trained, _ = outcomes[w]
        for class_index, j, checkpoint in trained:
            model.banks[class_index][j].restore(checkpoint)
    return [outcomes[w][0] for w in range(len(shares))]


def train_epoch_parallel(
    model: TrainableModel,
    pool: ExamplePool,
    workers: int,
    epoch: int = 0,
    seed: int | None = None,
) -> EpochReport:
    """One epoch with the clauses dealt over `workers` processes.

    Workers share only the vote tallies. Each trains its own clauses and
    hands them back when done. A single share runs in this process.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1, got {}".format(workers))
    seed = model.config.seed if seed is None else seed
    if pool.bind(model.banks):
        LOGGER.debug("bound %d banks to %d examples", len(model.banks), pool.size)

    root = FeedbackRng([seed, epoch])
    order = root.permutation(pool.size)
    shares = partition_clauses(model.banks, workers)
    streams = root.spawn(len(shares))
    total = sum(len(bank) for bank in model.banks)
    before = _versions(model.banks)

    start = time.perf_counter()
    if len(shares) == 1:
        stats = [_train_share(model, pool, shares[0], order, streams[0], total)]
    else:
        stats = _run_workers(model, pool, shares, order, streams, total)
    duration = time.perf_counter() - start

    merged = FeedbackStats()
    for worker_stats in stats:
        merged.merge(worker_stats)

    return EpochReport(
        epoch=epoch,
        duration=duration,
        mode=PARALLEL,
        workers=len(shares),
        metric_name=model.metric_name,
        clause_changes=_changes(before, model.banks),
        feedback=merged,
    )


def _truths(pool: ExamplePool) -> np.ndarray:
    return pool.raw_targets if pool.raw_targets is not None else pool.y


def target_reached(metric_name: str, value: float, target: float) -> bool:
    # error metrics improve downwards
    if metric_name == "mae":
        return value <= target
    return value >= target


def fit(
    model: TrainableModel,
    pool: ExamplePool,
    epochs: int | None = None,
    mode: str = SEQUENTIAL,
    workers: int | None = None,
    test: Tuple[np.ndarray, np.ndarray] | None = None,
    stop_when: float | None = None,
    refresh: bool = False,
    on_epoch: Callable[[EpochReport], None] | None = None,
) -> List[EpochReport]:
    """Train for up to `epochs` epochs and return one report per epoch.

    Metrics are computed after each epoch outside the timed region.
    """
    if mode not in MODES:
        raise ValueError("unknown training mode: {}".format(mode))
    config = model.config
    epochs = config.epochs if epochs is None else epochs
    workers = config.workers if workers is None else workers

    if mode == PARALLEL and refresh:
        refresh_tallies(pool, model.banks)

    rng = FeedbackRng(config.seed)
    reports: List[EpochReport] = []
    for epoch in range(epochs):
        if mode == SEQUENTIAL:
            report = train_epoch_sequential(model, pool, rng, epoch=epoch)
        else:
            report = train_epoch_parallel(model, pool, workers, epoch=epoch)

        _, report.train_metric = model.score(pool.X, _truths(pool))
        if test is not None:
            _, report.test_metric = model.score(*test)

        LOGGER.info(
            "epoch %d (%s): %.3fs, train %s %.4f, %d type I / %d type II",
            epoch,
            mode,
            report.duration,
            report.metric_name,
            report.train_metric,
            report.feedback.type_i,
            report.feedback.type_ii,
        )
        reports.append(report)
        if on_epoch is not None:
            on_epoch(report)

        if stop_when is not None and target_reached(
            report.metric_name, report.train_metric, stop_when
        ):
            LOGGER.info("train %s reached %s, stopping", report.metric_name, stop_when)
            break
    return reports
