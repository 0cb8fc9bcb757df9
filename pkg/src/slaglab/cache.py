"""On-disk cache of neck tabulations, enabled by the SLAGLAB_CACHE directory variable."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

FORMAT = 1
ENV_VAR = "SLAGLAB_CACHE"


def cache_dir() -> Path | None:
    d = os.environ.get(ENV_VAR)
    return Path(d) if d else None


def _key(a, tol: float) -> str:
    blob = json.dumps({"format": FORMAT, "a": [float(x) for x in a], "tol": float(tol)},
                      sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:20]


def _path(a, tol: float) -> Path | None:
    d = cache_dir()
    return None if d is None else d / f"neck-{_key(a, tol)}.json"


def load_table(a, tol: float) -> dict | None:
    p = _path(a, tol)
    if p is None or not p.exists():
        return None
    try:
        data = json.loads(p.read_text())
    except (OSError, json.JSONDecodeError):
        return None  # a corrupt entry is recomputed and overwritten
    if data.get("format") != FORMAT or data.get("a") != [float(x) for x in a]:
        return None
    return data["table"]


def store_table(a, tol: float, table: dict) -> None:
    p = _path(a, tol)
    if p is None:
        return
    p.parent.mkdir(parents=True, exist_ok=True)
    payload = {"format": FORMAT, "a": [float(x) for x in a], "tol": float(tol), "table": table}
    fd, tmp = tempfile.mkstemp(dir=p.parent, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        json.dump(payload, fh)
    os.replace(tmp, p)
