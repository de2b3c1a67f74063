from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field, replace

from .automaton import DEFAULT_DEPTH
from .exceptions import InvalidConfigException

LOGGER = logging.getLogger(__name__)


def default_workers() -> int:
    return os.cpu_count() or 1


@dataclass(frozen=True)
class TMConfig:
    clauses: int = 10
    margin: int = 5
    specificity: float = 3.0
    depth: int = DEFAULT_DEPTH
    boost_true_positive: bool = False
    epochs: int = 50
    workers: int = field(default_factory=default_workers)
    seed: int = 1

    def validate(self) -> TMConfig:
        if self.clauses < 2 or self.clauses % 2 != 0:
            raise InvalidConfigException(
                "clauses must be a positive even number, got {}".format(self.clauses)
            )
        if self.margin < 1:
            raise InvalidConfigException(
                "margin must be >= 1, got {}".format(self.margin)
            )
        if self.specificity < 1.0:
            raise InvalidConfigException(
                "specificity must be >= 1, got {}".format(self.specificity)
            )
        if self.depth < 1:
            raise InvalidConfigException(
                "state depth must be >= 1, got {}".format(self.depth)
            )
        if self.epochs < 1:
            raise InvalidConfigException(
                "epochs must be >= 1, got {}".format(self.epochs)
            )
        if self.workers < 1:
            raise InvalidConfigException(
                "workers must be >= 1, got {}".format(self.workers)
            )
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidConfigException(
                "seed must fit in 64 unsigned bits, got {}".format(self.seed)
            )
        return self

    def with_overrides(self, **overrides) -> TMConfig:
        # None means "not given on the command line"
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def serialize(self):
        return {
            "clauses": self.clauses,
            "margin": self.margin,
            "specificity": self.specificity,
            "depth": self.depth,
            "boostTruePositive": self.boost_true_positive,
            "epochs": self.epochs,
            "workers": self.workers,
            "seed": self.seed,
        }

    @classmethod
    def deserialize(cls, o) -> TMConfig:
        defaults = cls()
        return TMConfig(
            clauses=o.get("clauses", defaults.clauses),
            margin=o.get("margin", defaults.margin),
            specificity=o.get("specificity", defaults.specificity),
            depth=o.get("depth", defaults.depth),
            boost_true_positive=o.get(
                "boostTruePositive", defaults.boost_true_positive
            ),
            epochs=o.get("epochs", defaults.epochs),
            workers=o.get("workers", defaults.workers),
            seed=o.get("seed", defaults.seed),
        )
