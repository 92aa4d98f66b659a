"""Artifact files: profile cache, JSON reports and CSV tables.

Every file embeds the hash of the configuration that produced it and is
written atomically (temporary file in the target directory, then rename).
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .radial import RadialGrid, RadialProfile

__all__ = [
    "atomic_write",
    "write_json",
    "read_json",
    "write_csv",
    "read_csv",
    "save_profile",
    "load_profile",
    "CACHE_VERSION",
]

log = logging.getLogger(__name__)

CACHE_MAGIC = b"CHOQUARD-PROFILE\n"
CACHE_VERSION = 1


def atomic_write(path, data) -> Path:
    """Write ``data`` (str or bytes) to ``path`` via a temporary file and ``os.replace``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    raw = data.encode() if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(raw)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(path, payload: dict, config_hash: str) -> Path:
    body = {"config_hash": config_hash, **payload}
    return atomic_write(path, json.dumps(body, indent=2, sort_keys=True, default=_jsonable) + "\n")


def read_json(path, config_hash: str | None = None) -> dict:
    """Load a JSON artifact; refuse it if it was produced under another configuration."""
    with open(path) as fh:
        body = json.load(fh)
    _check_hash(path, body.get("config_hash"), config_hash)
    return body


def write_csv(path, rows, fieldnames, config_hash: str) -> Path:
    buf = io.StringIO()
    buf.write(f"# config_hash={config_hash}\n")
    writer = csv.DictWriter(buf, fieldnames=list(fieldnames), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                         for k, v in row.items()})
    return atomic_write(path, buf.getvalue())


def read_csv(path, config_hash: str | None = None) -> list:
    with open(path) as fh:
        first = fh.readline().strip()
        if not first.startswith("# config_hash="):
            raise ConfigError(f"{path} has no config hash header")
        _check_hash(path, first.split("=", 1)[1], config_hash)
        return list(csv.DictReader(fh))


def _check_hash(path, found, expected):
    if expected is not None and found != expected:
        raise ConfigError(f"{path} was produced by config {found}, not {expected}; refusing to mix artifacts")


# ---------------------------------------------------------------------------
# profile cache
# ---------------------------------------------------------------------------


def save_profile(path, p: RadialProfile, config_hash: str) -> Path:
    """Binary cache: magic line, one JSON header line, then the raw float64 arrays.

    The header records the payload's SHA-256, so identical profiles give
    bit-identical files.
    """
    payload = np.ascontiguousarray(p.values, "<f8").tobytes() + \
        np.ascontiguousarray(p.potential_values, "<f8").tobytes()
    header = {
        "version": CACHE_VERSION,
        "config_hash": config_hash,
        "r_max": p.grid.r_max,
        "n": p.grid.n,
        "tail": list(p.tail),
        "a": p.a,
        "tol": p.tol,
        "sha256": hashlib.sha256(payload).hexdigest(),
    }
    line = json.dumps(header, sort_keys=True).encode() + b"\n"
    return atomic_write(path, CACHE_MAGIC + line + payload)


def load_profile(path, config_hash: str | None = None) -> RadialProfile | None:
    """Read a cached profile; return ``None`` (with a warning) when it is missing or corrupt.

    A cache from a different configuration is treated like a corrupt one.
    """
    path = Path(path)
    if not path.exists():
        return None
    try:
        raw = path.read_bytes()
        if not raw.startswith(CACHE_MAGIC):
            raise ValueError("bad magic")
        rest = raw[len(CACHE_MAGIC):]
        nl = rest.index(b"\n")
        header = json.loads(rest[:nl])
        payload = rest[nl + 1:]
        if header.get("version") != CACHE_VERSION:
            raise ValueError(f"cache version {header.get('version')}")
        if hashlib.sha256(payload).hexdigest() != header["sha256"]:
            raise ValueError("checksum mismatch")
        if config_hash is not None and header["config_hash"] != config_hash:
            raise ValueError("cache belongs to another configuration")
        n = int(header["n"])
        arr = np.frombuffer(payload, dtype="<f8")
        if arr.size != 2 * n:
            raise ValueError("payload length mismatch")
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        log.warning("ignoring profile cache %s (%s); recomputing", path, exc)
        return None
    values, phi = arr[:n].copy(), arr[n:].copy()
    for a in (values, phi):
        a.setflags(write=False)
    grid = RadialGrid(float(header["r_max"]), n)
    return RadialProfile(grid, values, phi, tuple(header["tail"]), float(header["a"]), float(header["tol"]))
