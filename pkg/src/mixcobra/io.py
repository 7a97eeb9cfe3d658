"""CSV formats for datasets, machine predictions, error tables and CV surfaces.

All files are UTF-8, comma separated, ``.`` decimal point, LF line endings.
Raw values are written with ``repr`` so they read back bit-for-bit.
"""

from __future__ import annotations

import csv
import math
import os
from pathlib import Path

import numpy as np

from .combine import CLASSIFICATION, TASKS, Dataset, MachinePredictions

__all__ = [
    "DataFormatError",
    "load_dataset",
    "save_dataset",
    "load_predictions",
    "save_predictions",
    "save_error_table",
    "save_wins",
    "save_repetitions",
    "save_cv_surfaces",
    "format_number",
]


class DataFormatError(ValueError):
    """Malformed input file; the message names the offending row/column."""

    def __init__(self, message, path=None, row=None, column=None):
        self.path, self.row, self.column = path, row, column
        where = f"{path}: " if path else ""
        super().__init__(where + message)


def format_number(value: float) -> str:
    return repr(float(value))


def _read_rows(path):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row and any(cell.strip() for cell in row)]
    if not rows:
        raise DataFormatError("empty file", path)
    header = [h.strip() for h in rows[0]]
    return path, header, rows[1:]


def _parse_matrix(path, header, rows):
    width = len(header)
    out = np.empty((len(rows), width))
    for r, row in enumerate(rows, start=1):
        if len(row) != width:
            raise DataFormatError(f"row {r}: expected {width} fields, got {len(row)}", path, row=r)
        for c, cell in enumerate(row):
            try:
                value = float(cell)
            except ValueError:
                raise DataFormatError(f"row {r}, column {header[c]!r}: cannot parse {cell!r}",
                                      path, row=r, column=header[c]) from None
            if not math.isfinite(value):
                raise DataFormatError(f"row {r}, column {header[c]!r}: non-finite value {cell!r}",
                                      path, row=r, column=header[c])
            out[r - 1, c] = value
    return out


def load_dataset(path, task: str) -> Dataset:
    """Read a ``x1,...,xd,y`` file; the last column is the target."""
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}")
    path, header, rows = _read_rows(path)
    if len(header) < 2:
        raise DataFormatError("header needs at least one feature column and a target column", path)
    if not rows:
        raise DataFormatError("no data rows", path)
    values = _parse_matrix(path, header, rows)
    y = values[:, -1]
    for r, target in enumerate(y, start=1):
        if task == CLASSIFICATION and target not in (0.0, 1.0):
            raise DataFormatError(f"invalid label at row {r}: {target!r}", path, row=r, column=header[-1])
        if task != CLASSIFICATION and not 0.0 <= target <= 1.0:
            raise DataFormatError(f"target out of [0, 1] at row {r}: {target!r}", path, row=r, column=header[-1])
    return Dataset(values[:, :-1], y, task)


def _write_csv(path, header, rows):
    path = Path(path)
    if path.parent and not path.parent.exists():
        raise FileNotFoundError(f"directory does not exist: {path.parent}")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def save_dataset(data: Dataset, path) -> None:
    header = [f"x{j + 1}" for j in range(data.d)] + ["y"]
    rows = ([format_number(v) for v in x] + [format_number(t)] for x, t in zip(data.features, data.targets))
    _write_csv(path, header, rows)


def load_predictions(path, expected_n: int) -> MachinePredictions:
    """Read an ``n x p`` prediction file whose header holds the machine names."""
    path, header, rows = _read_rows(path)
    if len(set(header)) != len(header):
        dupes = sorted({h for h in header if header.count(h) > 1})
        raise DataFormatError(f"duplicate machine names in header: {', '.join(dupes)}", path)
    if any(not h for h in header):
        raise DataFormatError("empty machine name in header", path)
    if len(rows) != expected_n:
        raise DataFormatError(f"prediction file has {len(rows)} rows but the dataset has {expected_n}", path)
    values = _parse_matrix(path, header, rows)
    return MachinePredictions(values, tuple(header))


def save_predictions(preds: MachinePredictions, path) -> None:
    _write_csv(path, list(preds.machine_names), ([format_number(v) for v in row] for row in preds.values))


def _format_wins(w: float) -> str:
    text = f"{w:.6f}".rstrip("0").rstrip(".")
    return text or "0"


def save_error_table(table, path) -> None:
    """Write ``machine,mean_error,std_error,wins`` (6 decimals; wins blank for aggregators)."""
    if table.repetitions == 0:
        raise ValueError("no repetitions")
    wins = table.wins()
    rows = []
    for name in table.names:
        rows.append([
            name,
            f"{table.mean(name):.6f}",
            f"{table.std(name):.6f}",
            _format_wins(wins[name]) if name in wins else "",
        ])
    _write_csv(path, ["machine", "mean_error", "std_error", "wins"], rows)


def save_wins(table, path) -> None:
    if table.repetitions == 0:
        raise ValueError("no repetitions")
    _write_csv(path, ["machine", "wins"], ([n, _format_wins(w)] for n, w in table.wins().items()))


def save_repetitions(table, path) -> None:
    """Per-repetition test errors, one row per (machine, repetition)."""
    if table.repetitions == 0:
        raise ValueError("no repetitions")
    rows = ([name, str(k), format_number(e)] for name in table.names for k, e in enumerate(table.errors[name]))
    _write_csv(path, ["machine", "repetition", "error"], rows)


def save_cv_surfaces(records, path) -> None:
    """``records`` holds ``(aggregator, repetition, name1, value1, name2, value2, cv_error)``."""
    rows = ([agg, str(rep), n1, format_number(v1), n2, format_number(v2), format_number(err)]
            for agg, rep, n1, v1, n2, v2, err in records)
    _write_csv(path, ["aggregator", "repetition", "param1", "value1", "param2", "value2", "cv_error"], rows)


def ensure_dir(path) -> Path:
    path = Path(path)
    os.makedirs(path, exist_ok=True)
    return path
