from __future__ import annotations

import json
import logging
import os
from typing import Optional

from async_tm import TMConfig

LOGGER = logging.getLogger(__name__)

THREADS_ENV = "TM_THREADS"


def load_config(file: str) -> Optional[TMConfig]:
    if os.path.exists(file):
        with open(file, "r") as fh:
            try:
                raw_config = json.load(fh)
                return TMConfig.deserialize(raw_config)
            except Exception:
                LOGGER.exception("Error whilst loading config %s", file)
                return None

    return None


def write_config(file: str, config: TMConfig):
    with open(file, "w") as fh:
        json.dump(config.serialize(), fh, indent=4)


def resolve_workers(workers: Optional[int], environ=os.environ) -> Optional[int]:
    """TM_THREADS, when set, wins over --workers and the config file."""
    raw = environ.get(THREADS_ENV)
    if raw is None or raw == "":
        return workers
    try:
        threads = int(raw)
    except ValueError:
        LOGGER.warning("ignoring %s=%r, not an integer", THREADS_ENV, raw)
        return workers
    LOGGER.warning("%s=%d overrides the worker count", THREADS_ENV, threads)
    return threads
