from __future__ import annotations

import io
import logging
import os
import zipfile

import requests

from .data_io import REAL_LABELS, RawDataset, load_raw_csv
from .exceptions import DownloadException
from .urls import BIKE_SHARING_MEMBER, BIKE_SHARING_URL, DOWNLOAD_TIMEOUT, USER_AGENT

LOGGER = logging.getLogger(__name__)

BIKE_SHARING_FEATURES = [
    "season",
    "yr",
    "mnth",
    "hr",
    "holiday",
    "weekday",
    "workingday",
    "weathersit",
    "temp",
    "atemp",
    "hum",
    "windspeed",
]
BIKE_SHARING_TARGET = "cnt"


def _download(url: str) -> bytes:
    try:
        resp = requests.get(
            url, headers={"User-Agent": USER_AGENT}, timeout=DOWNLOAD_TIMEOUT
        )
        resp.raise_for_status()
    except requests.RequestException as e:
        raise DownloadException("could not fetch {}: {}".format(url, e))
    return resp.content


def fetch_bike_sharing(dest: str, url: str = BIKE_SHARING_URL) -> str:
    """Download the hourly Bike Sharing table into dest, returning its path.

    An existing copy is reused.
    """
    path = os.path.join(dest, BIKE_SHARING_MEMBER)
    if os.path.exists(path):
        LOGGER.debug("reusing %s", path)
        return path

    os.makedirs(dest, exist_ok=True)
    LOGGER.info("downloading %s", url)
    archive = _download(url)
    try:
        with zipfile.ZipFile(io.BytesIO(archive)) as zf:
            with zf.open(BIKE_SHARING_MEMBER) as member, open(path, "wb") as fh:
                fh.write(member.read())
    except (zipfile.BadZipFile, KeyError) as e:
        raise DownloadException("unexpected archive from {}: {}".format(url, e))

    LOGGER.info("wrote %s", path)
    return path


def load_bike_sharing(directory: str) -> RawDataset:
    return load_raw_csv(
        os.path.join(directory, BIKE_SHARING_MEMBER),
        label_column=BIKE_SHARING_TARGET,
        feature_columns=BIKE_SHARING_FEATURES,
        label_kind=REAL_LABELS,
    )
