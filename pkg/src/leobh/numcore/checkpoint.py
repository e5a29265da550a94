"""Model checkpoints: JSON with base64-encoded raw array bytes.

Raw little-endian bytes round-trip bit-exactly, unlike decimal text.
"""

from __future__ import annotations

import base64
import json
from pathlib import Path

import numpy as np


def _encode(arr: np.ndarray) -> dict:
    a = np.ascontiguousarray(arr)
    return {"shape": list(a.shape), "dtype": str(a.dtype),
            "data": base64.b64encode(a.tobytes()).decode("ascii")}


def _decode(doc: dict) -> np.ndarray:
    raw = base64.b64decode(doc["data"])
    return np.frombuffer(raw, dtype=np.dtype(doc["dtype"])).reshape(doc["shape"]).copy()


def save_checkpoint(path: str | Path, arrays: dict, meta: dict | None = None) -> None:
    doc = {"meta": meta or {}, "arrays": {k: _encode(v) for k, v in arrays.items()}}
    Path(path).write_text(json.dumps(doc) + "\n")


def load_checkpoint(path: str | Path):
    doc = json.loads(Path(path).read_text())
    return doc.get("meta", {}), {k: _decode(v) for k, v in doc["arrays"].items()}
