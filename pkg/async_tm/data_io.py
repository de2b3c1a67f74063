from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np
import pandas as pd
from sklearn.model_selection import train_test_split as sk_train_test_split

from .exceptions import (
    DatasetParseException,
    DatasetSchemaException,
    EmptyDatasetException,
)

LOGGER = logging.getLogger(__name__)

BINARY = "binary"
CONTINUOUS = "continuous"

CLASS_LABELS = "class"
REAL_LABELS = "real"

COMMENT = "#"


def _parse_label(path: str, line_number: int, token: str, label_kind: str):
    try:
        if label_kind == CLASS_LABELS:
            return int(token)
        return float(token)
    except ValueError:
        message = "label '{}' is not a {} label".format(token, label_kind)
        raise DatasetParseException(path, line_number, message) from None


def load_dense_binary(
    path: str, label_kind: str = CLASS_LABELS
) -> Tuple[np.ndarray, np.ndarray]:
    """Read whitespace-separated 0/1 rows with the label as the last token.

    Blank lines and lines starting with '#' are skipped.
    """
    rows: List[List[int]] = []
    labels = []
    width = None
    with open(path, "r") as fh:
        for line_number, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith(COMMENT):
                continue
            tokens = stripped.split()
            if len(tokens) < 2:
                raise DatasetSchemaException(
                    "{}:{}: need at least one feature and a label".format(
                        path, line_number
                    )
                )
            features = tokens[:-1]
            if width is None:
                width = len(features)
            elif len(features) != width:
                raise DatasetSchemaException(
                    "{}:{}: expected {} features, got {}".format(
                        path, line_number, width, len(features)
                    )
                )
            row = []
            for token in features:
                if token not in ("0", "1"):
                    raise DatasetParseException(
                        path, line_number, "non-binary token '{}'".format(token)
                    )
                row.append(int(token))
            rows.append(row)
            labels.append(_parse_label(path, line_number, tokens[-1], label_kind))

    if not rows:
        raise EmptyDatasetException("{} holds no examples".format(path))

    LOGGER.info("loaded %d examples with %d features from %s", len(rows), width, path)
    dtype = np.int64 if label_kind == CLASS_LABELS else np.float64
    return np.array(rows, dtype=np.uint8), np.array(labels, dtype=dtype)


def _format_label(label) -> str:
    if float(label).is_integer():
        return str(int(label))
    return repr(float(label))


def write_dense_binary(
    path: str,
    X: np.ndarray,
    y: Sequence | np.ndarray,
    header_comments: Iterable[str] = (),
):
    X = np.asarray(X, dtype=np.uint8)
    if X.ndim != 2 or X.shape[0] != len(y):
        raise DatasetSchemaException(
            "cannot write {} labels for a matrix of shape {}".format(len(y), X.shape)
        )
    with open(path, "w") as fh:
        for comment in header_comments:
            for line in str(comment).splitlines():
                fh.write("{} {}\n".format(COMMENT, line))
        for row, label in zip(X, y):
            fh.write(" ".join(str(int(bit)) for bit in row))
            fh.write(" {}\n".format(_format_label(label)))
    LOGGER.info("wrote %d examples to %s", X.shape[0], path)


def read_header_comments(path: str) -> List[str]:
    comments = []
    with open(path, "r") as fh:
        for line in fh:
            if not line.startswith(COMMENT):
                break
            comments.append(line[len(COMMENT):].strip())
    return comments


@dataclass
class RawDataset:
    features: np.ndarray
    labels: np.ndarray
    columns: List[str]
    kinds: List[str]
    label_name: str
    label_kind: str = CLASS_LABELS

    @property
    def size(self) -> int:
        return self.features.shape[0]

    def subset(self, indices: Sequence[int] | np.ndarray) -> RawDataset:
        indices = np.asarray(indices, dtype=np.int64)
        return RawDataset(
            features=self.features[indices],
            labels=self.labels[indices],
            columns=list(self.columns),
            kinds=list(self.kinds),
            label_name=self.label_name,
            label_kind=self.label_kind,
        )


def column_kind(values: np.ndarray) -> str:
    return BINARY if np.isin(values, (0, 1)).all() else CONTINUOUS


def load_raw_csv(
    path: str,
    label_column: str | None = None,
    feature_columns: Sequence[str] | None = None,
    label_kind: str = CLASS_LABELS,
) -> RawDataset:
    """Read a headed CSV of numeric columns. The label defaults to the last one."""
    try:
        frame = pd.read_csv(path)
    except pd.errors.EmptyDataError:
        raise EmptyDatasetException("{} holds no examples".format(path))
    if frame.empty:
        raise EmptyDatasetException("{} holds no examples".format(path))

    if label_column is None:
        label_column = frame.columns[-1]
    if label_column not in frame.columns:
        raise DatasetSchemaException(
            "{}: no label column '{}'".format(path, label_column)
        )
    if feature_columns is None:
        feature_columns = [c for c in frame.columns if c != label_column]
    missing = [c for c in feature_columns if c not in frame.columns]
    if missing:
        raise DatasetSchemaException(
            "{}: missing columns {}".format(path, ", ".join(missing))
        )

    selected = frame[list(feature_columns) + [label_column]]
    if selected.isnull().values.any():
        raise DatasetSchemaException("{}: rows with missing fields".format(path))
    non_numeric = [
        c for c in selected.columns if not pd.api.types.is_numeric_dtype(selected[c])
    ]
    if non_numeric:
        raise DatasetSchemaException(
            "{}: non-numeric columns {}".format(path, ", ".join(non_numeric))
        )

    features = selected[list(feature_columns)].to_numpy(dtype=np.float64)
    dtype = np.int64 if label_kind == CLASS_LABELS else np.float64
    labels = selected[label_column].to_numpy(dtype=dtype)
    kinds = [column_kind(features[:, k]) for k in range(features.shape[1])]

    LOGGER.info(
        "loaded %d rows, %d columns (%d continuous) from %s",
        features.shape[0],
        features.shape[1],
        kinds.count(CONTINUOUS),
        path,
    )
    return RawDataset(
        features=features,
        labels=labels,
        columns=[str(c) for c in feature_columns],
        kinds=kinds,
        label_name=str(label_column),
        label_kind=label_kind,
    )


def split_indices(
    size: int, test_fraction: float = 0.2, seed: int = 1
) -> Tuple[np.ndarray, np.ndarray]:
    if not 0.0 < test_fraction < 1.0:
        raise DatasetSchemaException(
            "test fraction must lie in (0, 1), got {}".format(test_fraction)
        )
    train, test = sk_train_test_split(
        np.arange(size), test_size=test_fraction, random_state=seed % 2 ** 32
    )
    return np.sort(train), np.sort(test)


def train_test_split(
    X: np.ndarray,
    y: np.ndarray,
    test_fraction: float = 0.2,
    seed: int = 1,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    X = np.asarray(X)
    y = np.asarray(y)
    train, test = split_indices(X.shape[0], test_fraction, seed)
    return X[train], y[train], X[test], y[test]
