from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import List

import numpy as np

from .data_io import BINARY, CONTINUOUS, RawDataset
from .exceptions import DatasetSchemaException, ModelFormatException

LOGGER = logging.getLogger(__name__)

DEFAULT_BITS_PER_FEATURE = 8
BINARIZER_FORMAT = "async-tm-binarizer"
BINARIZER_VERSION = 1


@dataclass
class ColumnThresholds:
    name: str
    kind: str
    thresholds: List[float]

    @property
    def width(self) -> int:
        return 1 if self.kind == BINARY else len(self.thresholds)

    def encode(self, values: np.ndarray) -> np.ndarray:
        if self.kind == BINARY:
            return (values > 0).astype(np.uint8)[:, np.newaxis]
        thresholds = np.asarray(self.thresholds, dtype=np.float64)
        return (values[:, np.newaxis] > thresholds[np.newaxis, :]).astype(np.uint8)


@dataclass
class BinarizerSpec:
    """Per-column quantile thresholds; a value x becomes the bits [x > t_b]."""

    bits_per_feature: int
    columns: List[ColumnThresholds]

    @property
    def width(self) -> int:
        return sum(column.width for column in self.columns)

    def serialize(self):
        return {
            "format": BINARIZER_FORMAT,
            "version": BINARIZER_VERSION,
            "bitsPerFeature": self.bits_per_feature,
            "columns": [
                {
                    "name": column.name,
                    "kind": column.kind,
                    "thresholds": [float(t) for t in column.thresholds],
                }
                for column in self.columns
            ],
        }

    @classmethod
    def deserialize(cls, o) -> BinarizerSpec:
        if o.get("format") != BINARIZER_FORMAT:
            raise ModelFormatException("not a binarizer record")
        if o.get("version") != BINARIZER_VERSION:
            raise ModelFormatException(
                "unsupported binarizer version {}".format(o.get("version"))
            )
        return BinarizerSpec(
            bits_per_feature=o["bitsPerFeature"],
            columns=[
                ColumnThresholds(
                    name=c["name"], kind=c["kind"], thresholds=list(c["thresholds"])
                )
                for c in o["columns"]
            ],
        )

    def to_json(self) -> str:
        return json.dumps(self.serialize(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> BinarizerSpec:
        try:
            return cls.deserialize(json.loads(text))
        except (ValueError, KeyError) as e:
            raise ModelFormatException("unreadable binarizer record: {}".format(e))


def quantile_thresholds(values: np.ndarray, bits_per_feature: int) -> np.ndarray:
    levels = np.arange(1, bits_per_feature + 1) / (bits_per_feature + 1)
    thresholds = np.unique(np.quantile(values, levels))
    # the column maximum must light every bit
    return thresholds[thresholds < values.max()]


def fit_binarizer(
    data: RawDataset, bits_per_feature: int = DEFAULT_BITS_PER_FEATURE
) -> BinarizerSpec:
    if bits_per_feature < 1:
        raise DatasetSchemaException(
            "bits per feature must be >= 1, got {}".format(bits_per_feature)
        )
    if data.size == 0:
        raise DatasetSchemaException("cannot fit a binarizer on zero rows")

    columns = []
    for k, (name, kind) in enumerate(zip(data.columns, data.kinds)):
        values = data.features[:, k]
        if kind == BINARY:
            columns.append(ColumnThresholds(name, BINARY, []))
            continue

        thresholds = quantile_thresholds(values, bits_per_feature)
        if thresholds.size == 0:
            LOGGER.warning("column %s is constant, encoding it as zeros", name)
            thresholds = np.array([values[0]])
        LOGGER.debug("column %s: %d thresholds", name, thresholds.size)
        columns.append(ColumnThresholds(name, CONTINUOUS, thresholds.tolist()))

    spec = BinarizerSpec(bits_per_feature=bits_per_feature, columns=columns)
    LOGGER.info("binarizer: %d columns -> %d bits", len(columns), spec.width)
    return spec


def apply_binarizer(spec: BinarizerSpec, data: RawDataset | np.ndarray) -> np.ndarray:
    features = data.features if isinstance(data, RawDataset) else np.asarray(data)
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if features.shape[1] != len(spec.columns):
        raise DatasetSchemaException(
            "binarizer expects {} columns, got {}".format(
                len(spec.columns), features.shape[1]
            )
        )
    return np.concatenate(
        [column.encode(features[:, k]) for k, column in enumerate(spec.columns)],
        axis=1,
    )
