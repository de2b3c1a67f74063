from __future__ import annotations

from hashlib import md5


def md5_hex(data: str | bytes) -> str:
    if isinstance(data, str):
        data = data.encode("utf8")
    return md5(data).hexdigest()


def md5_file(path: str) -> str:
    """Digest of a file's bytes; equal models saved twice give equal digests."""
    with open(path, "rb") as fh:
        return md5_hex(fh.read())
