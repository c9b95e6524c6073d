"""CSV and manifest writers.

Numbers go out with ``%.17g`` so that every float round-trips exactly and
identical runs give byte-identical files.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np

from .field import COMPONENTS, HybridField

FLOAT_FORMAT = "%.17g"


def write_csv(path, header, columns) -> str:
    """Write equal-length columns under a header row."""
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns]) if columns else np.zeros((0, 0))
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(",".join(header) + "\n")
        if data.size:
            np.savetxt(handle, data, fmt=FLOAT_FORMAT, delimiter=",")
    return path


def read_csv(path):
    """Inverse of :func:`write_csv`: ``(header, 2-D array)``."""
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


def snapshot_name(t: float) -> str:
    return f"snapshot_t{t:09.3f}.csv"


def write_snapshot(directory, field: HybridField) -> str:
    path = os.path.join(directory, snapshot_name(field.time))
    return write_csv(path, ("x", *COMPONENTS), [field.grid.x, *field.stack()])


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        return _jsonable(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


def write_manifest(directory, manifest: dict) -> str:
    path = os.path.join(directory, "manifest.json")
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(_jsonable(manifest), handle, indent=2, sort_keys=True)
        handle.write("\n")
    return path
