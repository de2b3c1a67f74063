from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Callable, List, Sequence, Tuple

import numpy as np
import pandas as pd

from .config import TMConfig
from .exceptions import DatasetSchemaException
from .machine import MultiClassTM
from .trainer import MODES, TrainableModel, fit

LOGGER = logging.getLogger(__name__)

# column name and dtype, in file order
BENCH_CSV_SCHEMA: List[Tuple[str, str]] = [
    ("mode", "object"),
    ("workers", "int64"),
    ("clauses", "int64"),
    ("epoch", "int64"),
    ("seconds", "float64"),
    ("metric_name", "object"),
    ("metric_value", "float64"),
]
BENCH_COLUMNS = [name for name, _ in BENCH_CSV_SCHEMA]


@dataclass
class BenchRecord:
    mode: str
    workers: int
    clauses: int
    epoch: int
    seconds: float
    metric_name: str
    metric_value: float


@dataclass
class BenchSummary:
    mode: str
    workers: int
    clauses: int
    seconds_per_epoch: float
    metric_name: str
    metric_value: float


def _classifier_for(X: np.ndarray, y: np.ndarray) -> Callable[[TMConfig], MultiClassTM]:
    classes = max(2, int(np.max(y)) + 1)

    def make(config: TMConfig) -> MultiClassTM:
        return MultiClassTM(config, X.shape[1], classes)

    return make


def bench_sweep(
    X: np.ndarray,
    y: np.ndarray,
    template: TMConfig,
    clause_counts: Sequence[int],
    modes: Sequence[str] = MODES,
    epochs: int = 4,
    make_model: Callable[[TMConfig], TrainableModel] | None = None,
) -> List[BenchRecord]:
    """Time fixed-length training runs for every (mode, clause count) pair.

    Every run starts from the template's seed. Only epochs are timed.
    """
    if not clause_counts:
        raise ValueError("at least one clause count is required")
    if make_model is None:
        make_model = _classifier_for(X, y)

    records = []
    for mode in modes:
        for clauses in clause_counts:
            config = template.with_overrides(clauses=clauses).validate()
            model = make_model(config)
            pool = model.new_pool(X, y)
            LOGGER.info("bench %s n=%d (%d epochs)", mode, clauses, epochs)
            for report in fit(model, pool, epochs=epochs, mode=mode):
                records.append(
                    BenchRecord(
                        mode=mode,
                        workers=report.workers,
                        clauses=clauses,
                        epoch=report.epoch,
                        seconds=report.duration,
                        metric_name=report.metric_name,
                        metric_value=report.train_metric,
                    )
                )
    return records


def records_frame(records: Sequence[BenchRecord]) -> pd.DataFrame:
    frame = pd.DataFrame([asdict(r) for r in records], columns=BENCH_COLUMNS)
    return frame.astype(dict(BENCH_CSV_SCHEMA))


def write_bench_csv(path, records: Sequence[BenchRecord]):
    records_frame(records).to_csv(path, index=False)
    LOGGER.info("wrote %d bench records", len(records))


def read_bench_csv(path) -> pd.DataFrame:
    frame = pd.read_csv(path)
    if list(frame.columns) != BENCH_COLUMNS:
        raise DatasetSchemaException(
            "bench columns {} do not match {}".format(
                ",".join(frame.columns), ",".join(BENCH_COLUMNS)
            )
        )
    try:
        frame = frame.astype(dict(BENCH_CSV_SCHEMA))
    except (ValueError, TypeError) as e:
        raise DatasetSchemaException("bench file has bad values: {}".format(e))
    if (frame["seconds"] <= 0).any():
        raise DatasetSchemaException("bench seconds must be positive")
    return frame


def summarize(records: Sequence[BenchRecord] | pd.DataFrame) -> List[BenchSummary]:
    """Median seconds per epoch per (mode, clauses), dropping the warm-up epoch.

    A run with a single epoch keeps it.
    """
    frame = records if isinstance(records, pd.DataFrame) else records_frame(records)
    summaries = []
    for (mode, clauses), run in frame.groupby(["mode", "clauses"], sort=False):
        run = run.sort_values("epoch")
        timed = run[run["epoch"] > run["epoch"].min()] if len(run) > 1 else run
        last = run.iloc[-1]
        summaries.append(
            BenchSummary(
                mode=mode,
                workers=int(last["workers"]),
                clauses=int(clauses),
                seconds_per_epoch=float(timed["seconds"].median()),
                metric_name=last["metric_name"],
                metric_value=float(last["metric_value"]),
            )
        )
    return summaries
