from __future__ import annotations

import json
import logging
from typing import Union

from .config import TMConfig
from .exceptions import (
    DatasetSchemaException,
    InvalidConfigException,
    ModelFormatException,
)
from .machine import MultiClassTM
from .regression import RegressionHead

LOGGER = logging.getLogger(__name__)

MODEL_FORMAT = "async-tm-model"
MODEL_VERSION = 1

Model = Union[MultiClassTM, RegressionHead]


def serialize_model(model: Model):
    """Counters of every clause plus what is needed to rebuild the model.

    Output bitmaps belong to a training pool and are not stored.
    """
    o = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "task": model.task,
        "config": model.config.serialize(),
        "numberOfFeatures": model.number_of_features,
        "banks": [
            [[int(c) for c in clause.states] for clause in bank]
            for bank in model.banks
        ],
    }
    if isinstance(model, RegressionHead):
        o["targetRange"] = [model.y_min, model.y_max]
    else:
        o["numberOfClasses"] = model.number_of_classes
        o["singleBank"] = model.single_bank
    return o


def deserialize_model(o) -> Model:
    if not isinstance(o, dict) or o.get("format") != MODEL_FORMAT:
        raise ModelFormatException("not an {} file".format(MODEL_FORMAT))
    if o.get("version") != MODEL_VERSION:
        raise ModelFormatException(
            "unsupported model version {}".format(o.get("version"))
        )

    try:
        config = TMConfig.deserialize(o["config"])
        if o["task"] == RegressionHead.task:
            y_min, y_max = o["targetRange"]
            model: Model = RegressionHead(config, o["numberOfFeatures"], y_min, y_max)
        elif o["task"] == MultiClassTM.task:
            model = MultiClassTM(
                config,
                o["numberOfFeatures"],
                o["numberOfClasses"],
                single_bank=o["singleBank"],
            )
        else:
            raise ModelFormatException("unknown task {}".format(o["task"]))

        banks = o["banks"]
        if len(banks) != len(model.banks):
            raise ModelFormatException(
                "expected {} banks, found {}".format(len(model.banks), len(banks))
            )
        for bank, counters in zip(model.banks, banks):
            if len(counters) != len(bank):
                raise ModelFormatException(
                    "expected {} clauses per bank, found {}".format(
                        len(bank), len(counters)
                    )
                )
            for clause, states in zip(bank, counters):
                clause.load_states(states)
    except (
        KeyError,
        TypeError,
        ValueError,
        DatasetSchemaException,
        InvalidConfigException,
    ) as e:
        raise ModelFormatException("malformed model file: {}".format(e))
    return model


def model_to_json(model: Model) -> str:
    return json.dumps(serialize_model(model), sort_keys=True, separators=(",", ":"))


def save_model(path: str, model: Model):
    with open(path, "w") as fh:
        fh.write(model_to_json(model))
        fh.write("\n")
    LOGGER.info("wrote model to %s", path)


def load_model(path: str) -> Model:
    with open(path, "r") as fh:
        try:
            raw = json.load(fh)
        except ValueError as e:
            raise ModelFormatException("{} is not JSON: {}".format(path, e))
    return deserialize_model(raw)
