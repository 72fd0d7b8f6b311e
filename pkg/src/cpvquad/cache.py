"""Process-wide memo caches, optionally persisted under CPVQUAD_CACHE_DIR.

Caches are transparent: deleting the directory (or never setting the env
var) changes nothing but the wall time.  Entries are JSON files named by a
digest of their key; the key itself is stored inside and re-checked on load.
Inserts hold a lock; reads of the in-memory map are safe from any thread.
"""

import hashlib
import json
import os
import tempfile
import threading

_LOCK = threading.Lock()
_MEMORY = {}


def _dir():
    return os.environ.get("CPVQUAD_CACHE_DIR") or None


def _path(section, key):
    digest = hashlib.sha256(key.encode()).hexdigest()[:24]
    return os.path.join(_dir(), section, f"{digest}.json")


def fetch(section, key):
    with _LOCK:
        if (section, key) in _MEMORY:
            return _MEMORY[(section, key)]
    if _dir() is None:
        return None
    path = _path(section, key)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except (OSError, ValueError):
        return None
    if payload.get("__key__") != key:
        return None
    payload.pop("__key__", None)
    with _LOCK:
        _MEMORY[(section, key)] = payload
    return payload


def store(section, key, payload):
    """payload must be a JSON-serializable dict of plain values."""
    with _LOCK:
        _MEMORY[(section, key)] = payload
    if _dir() is None:
        return
    path = _path(section, key)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    data = dict(payload)
    data["__key__"] = key
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path), suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(data, fh)
        os.replace(tmp, path)
    except OSError:
        try:
            os.unlink(tmp)
        except OSError:
            pass


def clear_memory():
    """Drop the in-memory layer (used by tests to exercise the disk path)."""
    with _LOCK:
        _MEMORY.clear()
