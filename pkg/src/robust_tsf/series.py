"""Series containers, CSV ingestion, normalization, splitting and windowing."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np


class DataError(ValueError):
    """Raised when input data cannot be parsed or fails a series invariant."""


@dataclass(frozen=True)
class TimeSeries:
    """Ordered real-valued observations.

    Values are copied into a read-only float64 array on construction.
    """

    values: np.ndarray
    name: str = "series"
    freq: Optional[str] = None

    def __post_init__(self):
        arr = np.array(self.values, dtype=float).ravel()
        if arr.size < 2:
            raise DataError(f"series {self.name!r} needs at least 2 values, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            bad = int(np.flatnonzero(~np.isfinite(arr))[0])
            raise DataError(f"series {self.name!r} has a non-finite value at index {bad}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.size

    def with_values(self, values, name: Optional[str] = None) -> "TimeSeries":
        return TimeSeries(values, name=self.name if name is None else name, freq=self.freq)


@dataclass(frozen=True)
class NormParams:
    mean: float
    std: float

    def __post_init__(self):
        if not (self.std > 0 and np.isfinite(self.std)):
            raise DataError(f"normalization std must be positive, got {self.std}")


@dataclass(frozen=True)
class WindowConfig:
    input_len: int
    horizon: int = 1
    stride: int = 1

    def __post_init__(self):
        for key in ("input_len", "horizon", "stride"):
            value = getattr(self, key)
            if int(value) != value or value < 1:
                raise ValueError(f"{key} must be a positive integer, got {value}")


@dataclass(frozen=True)
class SupervisedDataset:
    """Windowed (input, label) pairs cut from a parent series.

    ``inputs`` has shape (N, K) and ``labels`` shape (N, O). ``starts[n]`` is
    the parent index of the first input value of window n. ``source_mask`` is
    an optional per-point anomaly flag array aligned to the parent series.
    """

    inputs: np.ndarray
    labels: np.ndarray
    starts: np.ndarray
    config: WindowConfig
    source_mask: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        if self.inputs.ndim != 2 or self.labels.ndim != 2:
            raise ValueError("inputs and labels must be 2-D")
        if self.inputs.shape[0] != self.labels.shape[0] or self.inputs.shape[0] != self.starts.size:
            raise ValueError("inputs, labels and starts disagree on window count")
        if self.inputs.shape[1] != self.config.input_len or self.labels.shape[1] != self.config.horizon:
            raise ValueError("window shapes do not match the window config")

    def __len__(self) -> int:
        return self.inputs.shape[0]

    def replace(self, inputs=None, labels=None) -> "SupervisedDataset":
        return SupervisedDataset(
            inputs=self.inputs if inputs is None else inputs,
            labels=self.labels if labels is None else labels,
            starts=self.starts,
            config=self.config,
            source_mask=self.source_mask,
        )


def load_csv(path: Union[str, Path], column: Union[int, str] = 0) -> TimeSeries:
    """Read one numeric column of a CSV file into a :class:`TimeSeries`.

    Args:
        path: CSV file, UTF-8, at most one header row.
        column: zero-based column index or header name.

    Returns:
        Series in file order. A non-numeric first row is treated as a header.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: empty file")

    start = 0
    col_idx = column if isinstance(column, int) else None
    if not _is_float(_cell(rows[0], col_idx if col_idx is not None else 0)):
        header = [c.strip() for c in rows[0]]
        start = 1
        if col_idx is None:
            if column not in header:
                raise DataError(f"{path}: column {column!r} not in header {header}")
            col_idx = header.index(column)
    elif col_idx is None:
        raise DataError(f"{path}: column {column!r} requested but the file has no header")

    values = []
    for lineno, row in enumerate(rows[start:], start=start + 1):
        cell = _cell(row, col_idx)
        if cell is None:
            raise DataError(f"{path}: row {lineno} has no column {col_idx}")
        try:
            v = float(cell)
        except ValueError:
            raise DataError(f"{path}: non-numeric value {cell!r} at row {lineno}, column {col_idx}") from None
        if not np.isfinite(v):
            raise DataError(f"{path}: non-finite value at row {lineno}, column {col_idx}")
        values.append(v)
    if not values:
        raise DataError(f"{path}: column {column!r} is empty")
    return TimeSeries(values, name=path.stem)


def _cell(row, idx):
    if idx is None or idx >= len(row):
        return None
    return row[idx].strip()


def _is_float(text) -> bool:
    if text is None:
        return False
    try:
        float(text)
    except ValueError:
        return False
    return True


def normalize(ts: TimeSeries) -> tuple[TimeSeries, NormParams]:
    """Scale to zero mean and unit (population) standard deviation."""
    mean = float(np.mean(ts.values))
    std = float(np.std(ts.values))
    if std == 0.0:
        raise DataError(f"series {ts.name!r} is constant; cannot normalize")
    params = NormParams(mean, std)
    return apply_norm(ts, params), params


def apply_norm(ts: TimeSeries, p: NormParams) -> TimeSeries:
    return ts.with_values((ts.values - p.mean) / p.std)


def invert_norm(ts: TimeSeries, p: NormParams) -> TimeSeries:
    return ts.with_values(ts.values * p.std + p.mean)


def split(ts: TimeSeries, train_fraction: float = 0.7) -> tuple[TimeSeries, TimeSeries]:
    """Chronological split: the first ``floor(fraction * T)`` points train."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    cut = int(np.floor(train_fraction * len(ts)))
    if cut < 1 or cut >= len(ts):
        raise ValueError(f"train_fraction {train_fraction} leaves an empty part for length {len(ts)}")
    # each part may be a single point, which TimeSeries forbids; keep raw views
    train = _part(ts, ts.values[:cut], "train")
    test = _part(ts, ts.values[cut:], "test")
    return train, test


def _part(ts, values, suffix):
    if values.size < 2:
        obj = object.__new__(TimeSeries)
        arr = np.array(values, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(obj, "values", arr)
        object.__setattr__(obj, "name", f"{ts.name}:{suffix}")
        object.__setattr__(obj, "freq", ts.freq)
        return obj
    return TimeSeries(values, name=f"{ts.name}:{suffix}", freq=ts.freq)


def window(ts: Union[TimeSeries, np.ndarray], cfg: WindowConfig) -> SupervisedDataset:
    """Cut a series into (input, label) windows.

    Window n covers ``values[n*stride : n*stride + K]`` with label
    ``values[n*stride + K : n*stride + K + O]``.
    """
    values = ts.values if isinstance(ts, TimeSeries) else np.asarray(ts, dtype=float)
    K, O, stride = cfg.input_len, cfg.horizon, cfg.stride
    span = K + O
    if values.size < span:
        raise DataError(f"series of length {values.size} is too short for input_len={K}, horizon={O}")
    n = (values.size - span) // stride + 1
    starts = np.arange(n) * stride
    idx = starts[:, None] + np.arange(span)[None, :]
    block = values[idx]
    return SupervisedDataset(
        inputs=np.ascontiguousarray(block[:, :K]),
        labels=np.ascontiguousarray(block[:, K:]),
        starts=starts,
        config=cfg,
    )


def _check_pair(preds, targets):
    preds = np.asarray(preds, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if preds.shape != targets.shape:
        raise ValueError(f"shape mismatch: {preds.shape} vs {targets.shape}")
    if preds.size == 0:
        raise ValueError("empty prediction set")
    return preds, targets


def mae(preds, targets) -> float:
    preds, targets = _check_pair(preds, targets)
    return float(np.mean(np.abs(targets - preds)))


def mse(preds, targets) -> float:
    preds, targets = _check_pair(preds, targets)
    return float(np.mean((targets - preds) ** 2))
