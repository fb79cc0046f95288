"""CSV output: '#'-prefixed metadata, one header line, 17 significant digits."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np


def _meta_value(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    if isinstance(v, (list, tuple, dict)):
        return json.dumps(v, sort_keys=True, default=str)
    return str(v)


def _cell(x) -> str:
    if isinstance(x, (str, np.str_)):
        return str(x)
    return format(float(x), ".17g")


def write_csv(path, columns: Sequence[str], data: Sequence, metadata: Mapping = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = [np.asarray(c) for c in data]
    n = {c.size for c in cols}
    if len(n) != 1:
        raise ValueError("columns have different lengths")
    lines = [f"# {k}: {_meta_value(v)}" for k, v in sorted((metadata or {}).items())]
    lines.append(",".join(columns))
    for row in zip(*cols):
        lines.append(",".join(_cell(x) for x in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path):
    """Returns (metadata dict of raw strings, header, rows); rows is a 2D array
    unless some cell is text."""
    meta, header, rows = {}, None, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].partition(":")
            meta[key.strip()] = val.strip()
        elif header is None:
            header = line.split(",")
        elif line:
            rows.append([_parse(x) for x in line.split(",")])
    return meta, header, rows if any(isinstance(x, str) for r in rows for x in r) else np.array(rows)


def _parse(x: str):
    try:
        return float(x)
    except ValueError:
        return x
