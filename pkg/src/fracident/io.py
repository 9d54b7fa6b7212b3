"""File formats: ``t,value`` CSV signals and JSON documents."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .signals import SampledSignal

CSV_HEADER = ("t", "value")


def format_float(x: float) -> str:
    """Shortest decimal string that parses back to the same double."""
    return repr(float(x))


def write_signal_csv(signal: SampledSignal, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for t, v in zip(signal.times, signal.samples):
            writer.writerow((format_float(t), format_float(v)))


def read_signal_csv(path, rtol: float = 1e-6) -> SampledSignal:
    """Read a ``t,value`` CSV; the time column must be uniformly spaced."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise ValueError(f"{path}: expected header 't,value', got {header!r}")
        times, values = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            try:
                times.append(float(row[0]))
                values.append(float(row[1]))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric entry {row!r}") from None
    if len(times) < 2:
        raise ValueError(f"{path}: need at least two samples")
    t = np.array(times)
    steps = np.diff(t)
    period = (t[-1] - t[0]) / (t.size - 1)
    if not period > 0 or np.max(np.abs(steps - period)) > rtol * period:
        raise ValueError(f"{path}: time column is not uniformly increasing")
    # snap to the nominal spacing so t = 0.05 * k grids come back exact
    nominal = float(steps[0]) if abs(steps[0] - period) <= 1e-12 * period else period
    return SampledSignal(float(t[0]), nominal, np.array(values))


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, shortest round-trip floats, NaN as null."""
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(obj, path) -> None:
    Path(path).write_text(dumps(obj))


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()
