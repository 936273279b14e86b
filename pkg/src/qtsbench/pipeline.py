"""Data ingestion, normalization, temporal folds, windows, metrics, early stop.

The fold layout is strictly walk-forward: fold i covers ``fold_len`` points
starting at ``i * shift``, trains on the first ``train_len`` of them and
evaluates one-step-ahead on the rest, so no evaluation point ever precedes a
training point of its own fold.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DataError, UsageError


@dataclass
class RawSeries:
    """Univariate series with strictly increasing timestamps."""

    name: str
    timestamps: list
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1 or len(self.values) < 1:
            raise DataError("series must hold at least one value")
        if len(self.timestamps) != len(self.values):
            raise DataError("timestamps and values must have equal length")
        if not np.all(np.isfinite(self.values)):
            bad = np.flatnonzero(~np.isfinite(self.values)).tolist()
            raise DataError(f"non-finite values at positions {bad[:10]}")

    def __len__(self) -> int:
        return len(self.values)


def _parse_timestamp(text: str):
    try:
        return float(text)
    except ValueError:
        pass
    try:
        return datetime.fromisoformat(text.strip())
    except ValueError:
        return None


def load_csv(
    path: str | Path,
    value_column: str = "value",
    timestamp_column: str | None = None,
) -> RawSeries:
    """Read one series from a headered CSV file.

    Every malformed row is collected and reported by its 1-based line
    number; a single bad value fails the whole load rather than silently
    shortening the series.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        header = [h.strip() for h in header]
        if value_column not in header:
            raise DataError(f"missing column {value_column!r} in {path} (header: {header})")
        v_idx = header.index(value_column)
        t_idx = None
        if timestamp_column is not None:
            if timestamp_column not in header:
                raise DataError(
                    f"missing column {timestamp_column!r} in {path} (header: {header})"
                )
            t_idx = header.index(timestamp_column)

        values, timestamps, bad_rows = [], [], []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) <= v_idx or (t_idx is not None and len(row) <= t_idx):
                bad_rows.append(line_no)
                continue
            try:
                value = float(row[v_idx])
            except ValueError:
                bad_rows.append(line_no)
                continue
            if not math.isfinite(value):
                bad_rows.append(line_no)
                continue
            if t_idx is not None:
                ts = _parse_timestamp(row[t_idx])
                if ts is None:
                    bad_rows.append(line_no)
                    continue
                timestamps.append(ts)
            values.append(value)

    if bad_rows:
        raise DataError(f"unparseable rows in {path}: lines {bad_rows[:20]}")
    if not values:
        raise DataError(f"{path} contains no data rows")
    if t_idx is None:
        timestamps = list(range(len(values)))
    else:
        kinds = {type(t) for t in timestamps}
        if len(kinds) > 1:
            raise DataError(f"mixed timestamp types in {path}: {sorted(k.__name__ for k in kinds)}")
        non_increasing = [
            i + 3 for i in range(len(timestamps) - 1) if timestamps[i + 1] <= timestamps[i]
        ]
        if non_increasing:
            raise DataError(
                f"timestamps not strictly increasing in {path}: lines {non_increasing[:20]}"
            )
    return RawSeries(name=path.stem, timestamps=timestamps, values=np.asarray(values))


@dataclass
class NormalizedSeries:
    """Series rescaled to [0,1] with the stats needed to invert the map."""

    values: np.ndarray
    vmin: float
    vmax: float

    def denormalize(self, x):
        return self.vmin + np.asarray(x, dtype=np.float64) * (self.vmax - self.vmin)


def minmax_normalize(series, stats_slice: slice | None = None) -> NormalizedSeries:
    """x -> (x - min) / (max - min); stats over the full series by default.

    ``stats_slice`` restricts the min/max computation (train-only mode);
    values outside the stats range then fall outside [0,1] and are left
    untouched.
    """
    values = series.values if isinstance(series, RawSeries) else np.asarray(series, dtype=np.float64)
    ref = values[stats_slice] if stats_slice is not None else values
    if ref.size == 0:
        raise UsageError("empty stats range for normalization")
    vmin = float(np.min(ref))
    vmax = float(np.max(ref))
    if vmax <= vmin:
        raise DataError("constant series cannot be min-max normalized")
    return NormalizedSeries((values - vmin) / (vmax - vmin), vmin, vmax)


class FoldPurpose(str, Enum):
    VALIDATION = "VALIDATION"
    TEST = "TEST"


@dataclass(frozen=True)
class SeriesFold:
    """One temporal train/evaluation split with absolute index ranges."""

    index: int
    purpose: FoldPurpose
    train_start: int
    train_end: int
    eval_start: int
    eval_end: int

    def __post_init__(self) -> None:
        if self.train_end != self.eval_start:
            raise ConfigurationError("evaluation range must begin where training ends")
        if not (self.train_start < self.train_end < self.eval_end):
            raise ConfigurationError("fold ranges must be non-empty and ordered")
        # leakage check: latest train index strictly precedes earliest eval index
        assert self.train_end - 1 < self.eval_start


def make_folds(
    series_length: int,
    n_validation: int = 3,
    n_test: int = 3,
    fold_len: int = 500,
    train_len: int = 450,
    shift: int = 50,
) -> list[SeriesFold]:
    """Walk-forward folds: the first ``n_validation`` tune hyperparameters,
    the following ``n_test`` score the tuned models."""
    if n_validation < 0 or n_test < 0 or n_validation + n_test < 1:
        raise ConfigurationError("need at least one fold")
    if not (0 < train_len < fold_len):
        raise ConfigurationError("train_len must be positive and below fold_len")
    if shift < 1:
        raise ConfigurationError("shift must be at least 1")
    n_folds = n_validation + n_test
    minimum = (n_folds - 1) * shift + fold_len
    if series_length < minimum:
        raise ConfigurationError(
            f"series length {series_length} is too short for {n_folds} folds; "
            f"minimum is {minimum}"
        )
    folds = []
    for i in range(n_folds):
        start = i * shift
        purpose = FoldPurpose.VALIDATION if i < n_validation else FoldPurpose.TEST
        folds.append(
            SeriesFold(
                index=i,
                purpose=purpose,
                train_start=start,
                train_end=start + train_len,
                eval_start=start + train_len,
                eval_end=start + fold_len,
            )
        )
    return folds


def windowize(values, n: int):
    """Sliding windows of length n and their one-step-ahead targets."""
    values = np.asarray(values, dtype=np.float64)
    if n < 1:
        raise UsageError("window length must be at least 1")
    if len(values) <= n:
        raise UsageError(f"need more than {n} values to build windows, got {len(values)}")
    count = len(values) - n
    idx = np.arange(n)[np.newaxis, :] + np.arange(count)[:, np.newaxis]
    return values[idx], values[n:]


def _check_pair(y, y_hat):
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y.shape != y_hat.shape or y.size == 0:
        raise UsageError(f"metric inputs must be equal-length and non-empty, got {y.shape} vs {y_hat.shape}")
    return y, y_hat


def mse(y, y_hat) -> float:
    y, y_hat = _check_pair(y, y_hat)
    return float(np.mean((y - y_hat) ** 2))


def mae(y, y_hat) -> float:
    y, y_hat = _check_pair(y, y_hat)
    return float(np.mean(np.abs(y - y_hat)))


def early_stop_check(trace, patience: int, min_delta: float) -> tuple[bool, int]:
    """Apply the patience rule to a validation-loss trace.

    Returns (stop, best_epoch).  ``stop`` is True when the qualified best
    loss went ``patience`` consecutive epochs without improving by at least
    ``min_delta``; ``best_epoch`` is the earliest argmin of the losses seen
    up to the stopping point.
    """
    if patience < 1:
        raise ConfigurationError("patience must be at least 1")
    if min_delta < 0:
        raise ConfigurationError("min_delta must be non-negative")
    trace = list(trace)
    if not trace:
        return False, -1
    qualified_best = math.inf
    streak = 0
    stop_at = len(trace)
    stopped = False
    for epoch, loss in enumerate(trace):
        # improvement must be strict even when min_delta is zero
        if loss < qualified_best and qualified_best - loss >= min_delta:
            qualified_best = loss
            streak = 0
        else:
            streak += 1
        if streak >= patience:
            stopped = True
            stop_at = epoch + 1
            break
    seen = np.asarray(trace[:stop_at])
    return stopped, int(np.argmin(seen))
