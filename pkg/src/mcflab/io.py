"""Atomic, deterministic file output."""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np


def atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, (np.floating,)):
        x = float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, float) and not np.isfinite(x):
        return repr(x)
    return x


def dumps(obj):
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"


def csv_text(schema, columns, rows):
    """CSV whose first line names the schema; floats written with repr (round-trip exact)."""
    out = [f"# schema: {schema}", ",".join(columns)]
    for row in rows:
        out.append(",".join(repr(float(v)) if isinstance(v, (float, np.floating)) else str(v) for v in row))
    return "\n".join(out) + "\n"


def read_csv(text):
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# schema:"):
        raise ValueError("missing schema header")
    schema = lines[0].split(":", 1)[1].strip()
    cols = lines[1].split(",")
    rows = [line.split(",") for line in lines[2:] if line]
    return schema, cols, rows
