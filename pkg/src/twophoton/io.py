"""Deterministic CSV and JSON writers with atomic replacement."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Mapping, Sequence


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int,)) and not isinstance(value, bool):
        return str(value)
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        value = value.item()
        if isinstance(value, int):
            return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return format(value, ".17g")
    if isinstance(value, complex):
        raise TypeError("complex values must be split into real columns before writing")
    return str(value)


def atomic_write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_table(rows: Iterable, columns: Sequence[str], path, metadata: Mapping | None = None) -> Path:
    """CSV with a fixed column order; rows are mappings or sequences.

    Floats use 17 significant digits, NaN and None become empty cells. When
    ``metadata`` is given it is written next to the table as ``<path>.json``.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        if isinstance(row, Mapping):
            cells = [row.get(c) for c in columns]
        else:
            cells = list(row)
            if len(cells) != len(columns):
                raise ValueError(f"row has {len(cells)} cells, expected {len(columns)}")
        writer.writerow([format_cell(c) for c in cells])
    out = atomic_write_text(path, buf.getvalue())
    if metadata is not None:
        write_json(metadata, Path(str(path) + ".json"))
    return out


def _json_default(obj):
    if hasattr(obj, "item"):
        return obj.item()
    if hasattr(obj, "tolist"):
        return obj.tolist()
    if hasattr(obj, "as_dict"):
        return obj.as_dict()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, Mapping):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def write_json(data, path) -> Path:
    text = json.dumps(_clean(data), indent=2, sort_keys=True, default=_json_default) + "\n"
    return atomic_write_text(path, text)
