"""CSV / JSON writers shared by all artifact exporters.

CSV bodies are deterministic for a fixed input (full 17-significant-digit
decimal, '.' separator). The only non-reproducible element is a leading
comment line carrying the timestamp, which consumers must ignore when
comparing runs.
"""

import json
import os
from datetime import datetime, timezone

import numpy as np

FLOAT_FMT = "%.17g"


def format_float(x) -> str:
    return FLOAT_FMT % float(x)


def write_csv(path, header, columns, timestamp=True):
    """Write columns (equal-length 1-d sequences) under the given header.

    The first line is ``# timestamp=<iso>`` so that reruns differ only
    there; everything from the header row on is byte-reproducible.
    """
    columns = [np.asarray(c) for c in columns]
    if len(header) != len(columns):
        raise ValueError("header/column count mismatch")
    n = len(columns[0])
    if any(len(c) != n for c in columns):
        raise ValueError("columns must have equal length")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        if timestamp:
            fh.write("# timestamp=%s\n" % datetime.now(timezone.utc).isoformat())
        fh.write(",".join(header) + "\n")
        for i in range(n):
            fh.write(",".join(format_float(c[i]) for c in columns) + "\n")


def csv_body(path) -> str:
    """Content of a CSV file with comment lines stripped (for comparisons)."""
    with open(path) as fh:
        return "".join(line for line in fh if not line.startswith("#"))


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def write_json(path, obj, timestamp=True):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    doc = _jsonable(obj)
    if timestamp and isinstance(doc, dict):
        doc = dict(doc, timestamp=datetime.now(timezone.utc).isoformat())
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
