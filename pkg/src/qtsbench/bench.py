"""Experiment harness: seeded runs, grid-search HPO, aggregation, record files.

A run is one (family, config, fold, repeat) cell.  Its seed mixes the
experiment seed with a stable 64-bit hash of the cell coordinates, so any
subset of runs can execute in any order (or in parallel processes) and still
reproduce bit-identical records.  Divergent runs (non-finite weights or raw
predictions beyond the divergence limit) keep their record but are excluded
from every aggregate.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, UsageError
from .models import (
    CLAMP_RANGE,
    DEFAULT_GRIDS,
    DIVERGENCE_LIMIT,
    ModelSpec,
    fit_model,
    validate_hyperparameters,
)
from .pipeline import NormalizedSeries, SeriesFold, mae, minmax_normalize, mse

log = logging.getLogger(__name__)

GRID_SIZE_CAP = 128


@dataclass
class SeriesContext:
    """Everything a worker needs to run one evaluation cell."""

    raw: np.ndarray
    normalization: str = "full"  # or "train_only"
    metric_units: str = "original"  # or "normalized"
    norm: NormalizedSeries | None = None

    def __post_init__(self) -> None:
        self.raw = np.asarray(self.raw, dtype=np.float64)
        if self.normalization not in ("full", "train_only"):
            raise ConfigurationError(f"unknown normalization mode {self.normalization!r}")
        if self.metric_units not in ("original", "normalized"):
            raise ConfigurationError(f"unknown metric units {self.metric_units!r}")
        if self.norm is None and self.normalization == "full":
            self.norm = minmax_normalize(self.raw)

    def fold_normalization(self, fold: SeriesFold) -> NormalizedSeries:
        if self.normalization == "train_only":
            return minmax_normalize(self.raw, stats_slice=slice(fold.train_start, fold.train_end))
        return self.norm


@dataclass
class RunRecord:
    """One (model, config, fold, repeat) evaluation result."""

    family: str
    config: dict
    fold: int
    repeat: int
    seed: int
    mae: float
    mse: float
    diverged: bool
    epochs_trained: int
    trace: list
    wall_time: float
    phase: str = "validation"
    notes: list = field(default_factory=list)
    raw_out_of_range: list = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.diverged:
            if self.mae < 0 or self.mae > math.sqrt(self.mse) + 1e-9:
                raise RuntimeError(
                    f"metric invariant violated: mae={self.mae}, mse={self.mse}"
                )

    def to_dict(self) -> dict:
        def scrub(x):
            if isinstance(x, float) and not math.isfinite(x):
                return None
            return x

        return {
            "family": self.family,
            "config": self.config,
            "fold": self.fold,
            "repeat": self.repeat,
            "seed": self.seed,
            "mae": scrub(self.mae),
            "mse": scrub(self.mse),
            "diverged": self.diverged,
            "epochs_trained": self.epochs_trained,
            "trace": [scrub(v) for v in self.trace],
            "wall_time": self.wall_time,
            "phase": self.phase,
            "notes": list(self.notes),
            "raw_out_of_range": [scrub(v) for v in self.raw_out_of_range],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "RunRecord":
        def restore(x):
            return float("nan") if x is None else x

        return cls(
            family=payload["family"],
            config=payload["config"],
            fold=payload["fold"],
            repeat=payload["repeat"],
            seed=payload["seed"],
            mae=restore(payload["mae"]),
            mse=restore(payload["mse"]),
            diverged=payload["diverged"],
            epochs_trained=payload["epochs_trained"],
            trace=[restore(v) for v in payload["trace"]],
            wall_time=payload["wall_time"],
            phase=payload.get("phase", "validation"),
            notes=payload.get("notes", []),
            raw_out_of_range=[restore(v) for v in payload.get("raw_out_of_range", [])],
        )


def config_key(config: dict) -> str:
    """Canonical serialization used for hashing, seeding, and tie-breaking."""
    return json.dumps(config, sort_keys=True, default=list)


def stable_hash64(text: str) -> int:
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")


def run_seed(seed_base: int, family: str, config: dict, fold_index: int, repeat: int) -> int:
    payload = f"{family}|{config_key(config)}|{fold_index}|{repeat}"
    return (int(seed_base) ^ stable_hash64(payload)) & (2**63 - 1)


def rolling_forecast(model, values: np.ndarray, eval_start: int, eval_end: int) -> np.ndarray:
    """One-step-ahead predictions over the eval range using true past values."""
    length = model.window_length
    if eval_start - length < 0:
        raise UsageError(
            f"window length {length} reaches before the series start at index {eval_start}"
        )
    if eval_end > len(values):
        raise UsageError(
            f"evaluation range ends at {eval_end} but the series has {len(values)} points"
        )
    preds = np.empty(eval_end - eval_start)
    for k, t in enumerate(range(eval_start, eval_end)):
        preds[k] = model.predict_next(values[t - length : t])
    return preds


def run_single(family: str, config: dict, ctx: SeriesContext, fold: SeriesFold,
               repeat: int, seed: int, phase: str) -> RunRecord:
    start_time = time.perf_counter()
    norm = ctx.fold_normalization(fold)
    spec = ModelSpec(family, config, seed)
    model = fit_model(spec, norm.values[fold.train_start : fold.train_end])

    raw_preds = rolling_forecast(model, norm.values, fold.eval_start, fold.eval_end)
    finite = np.isfinite(raw_preds)
    out_of_range = finite & (np.abs(raw_preds) > DIVERGENCE_LIMIT)
    diverged = bool(model.diverged or not finite.all() or out_of_range.any())
    raw_kept = raw_preds[~finite | out_of_range].tolist()

    if finite.all():
        clamped = np.clip(raw_preds, *CLAMP_RANGE)
        if ctx.metric_units == "original":
            y_pred = norm.denormalize(clamped)
            y_true = ctx.raw[fold.eval_start : fold.eval_end]
        else:
            y_pred = clamped
            y_true = norm.values[fold.eval_start : fold.eval_end]
        run_mae = mae(y_true, y_pred)
        run_mse = mse(y_true, y_pred)
    else:
        run_mae = float("nan")
        run_mse = float("nan")

    return RunRecord(
        family=family,
        config=dict(spec.hyperparameters),
        fold=fold.index,
        repeat=repeat,
        seed=seed,
        mae=run_mae,
        mse=run_mse,
        diverged=diverged,
        epochs_trained=model.epochs_trained,
        trace=list(model.trace),
        wall_time=time.perf_counter() - start_time,
        phase=phase,
        notes=list(getattr(model, "flags", [])),
        raw_out_of_range=raw_kept,
    )


def expand_grid(family: str, grid: dict | None) -> list[dict]:
    """Cartesian product of the per-hyperparameter candidate lists."""
    grid = dict(grid if grid is not None else DEFAULT_GRIDS[family])
    for name, values in grid.items():
        if not isinstance(values, (list, tuple)) or not values:
            raise ConfigurationError(
                f"grid entry {name!r} for {family} must be a non-empty list"
            )
    names = sorted(grid)
    size = 1
    for name in names:
        size *= len(grid[name])
    if size > GRID_SIZE_CAP:
        raise ConfigurationError(
            f"grid for {family} has {size} points, above the cap of {GRID_SIZE_CAP}"
        )
    configs = []
    for combo in product(*(grid[name] for name in names)):
        config = dict(zip(names, combo))
        configs.append(validate_hyperparameters(family, config))
    return configs


def _worker(task):
    family, config, ctx, fold, repeat, seed, phase = task
    return run_single(family, config, ctx, fold, repeat, seed, phase)


def _run_tasks(tasks: list, parallelism: int) -> list[RunRecord]:
    if parallelism <= 1 or len(tasks) <= 1:
        records = [_worker(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            records = list(pool.map(_worker, tasks, chunksize=1))
    # deterministic reduction order regardless of execution order
    records.sort(key=lambda r: (config_key(r.config), r.fold, r.repeat))
    return records


def _config_stats(records: list[RunRecord]):
    kept = [r.mae for r in records if not r.diverged]
    if not kept:
        return None
    return float(np.mean(kept)), float(np.std(kept))


def grid_search(family: str, grid: dict | None, ctx: SeriesContext,
                validation_folds: list[SeriesFold], repeats: int = 10,
                seed_base: int = 0, parallelism: int = 1):
    """Run the full grid on the validation folds and pick the lowest mean MAE.

    Ties break toward the lower MAE standard deviation, then the
    lexicographically smaller canonical config serialization.  Returns
    (best_config, all_records).
    """
    if not validation_folds:
        raise ConfigurationError("grid search needs at least one validation fold")
    if repeats < 1:
        raise ConfigurationError("repeats must be at least 1")
    configs = expand_grid(family, grid)
    tasks = [
        (family, config, ctx, fold, repeat,
         run_seed(seed_base, family, config, fold.index, repeat), "validation")
        for config in configs
        for fold in validation_folds
        for repeat in range(repeats)
    ]
    records = _run_tasks(tasks, parallelism)

    by_config: dict[str, list[RunRecord]] = {}
    for record in records:
        by_config.setdefault(config_key(record.config), []).append(record)

    candidates = []
    for key, config in sorted((config_key(c), c) for c in configs):
        stats = _config_stats(by_config.get(key, []))
        if stats is None:
            log.warning("%s config %s: every run diverged; excluded from selection", family, key)
            continue
        mean_mae, std_mae = stats
        candidates.append((mean_mae, std_mae, key, config))
    if not candidates:
        raise RuntimeError(f"every configuration of {family} diverged")
    candidates.sort(key=lambda c: (c[0], c[1], c[2]))
    best_config = candidates[0][3]
    return best_config, records


@dataclass
class AggregateResult:
    """Mean/std statistics over the non-diverged runs of one configuration."""

    family: str
    config: dict
    count: int
    diverged_count: int
    mean_mae: float
    std_mae: float
    mean_mse: float
    per_fold: dict


def aggregate(records: list[RunRecord]) -> AggregateResult:
    if not records:
        raise UsageError("cannot aggregate zero records")
    family = records[0].family
    config = records[0].config
    kept = [r for r in records if not r.diverged]
    if not kept:
        raise RuntimeError(f"every run of {family} diverged; nothing to aggregate")
    per_fold = {}
    for fold_index in sorted({r.fold for r in kept}):
        fold_maes = [r.mae for r in kept if r.fold == fold_index]
        per_fold[fold_index] = float(np.mean(fold_maes))
    return AggregateResult(
        family=family,
        config=config,
        count=len(records),
        diverged_count=len(records) - len(kept),
        mean_mae=float(np.mean([r.mae for r in kept])),
        std_mae=float(np.std([r.mae for r in kept])),
        mean_mse=float(np.mean([r.mse for r in kept])),
        per_fold=per_fold,
    )


def evaluate_best(family: str, config: dict, ctx: SeriesContext,
                  test_folds: list[SeriesFold], repeats: int = 10,
                  seed_base: int = 0, parallelism: int = 1):
    """Score one configuration on the test folds; metrics in original units."""
    if not test_folds:
        raise ConfigurationError("evaluation needs at least one test fold")
    test_ctx = SeriesContext(
        raw=ctx.raw, normalization=ctx.normalization, metric_units="original", norm=ctx.norm
    )
    config = validate_hyperparameters(family, config)
    tasks = [
        (family, config, test_ctx, fold, repeat,
         run_seed(seed_base, family, config, fold.index, repeat), "test")
        for fold in test_folds
        for repeat in range(repeats)
    ]
    records = _run_tasks(tasks, parallelism)
    return aggregate(records), records


# ---------------------------------------------------------------------------
# record files


def append_records(path: str | Path, records: list[RunRecord]) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")


def read_records(path: str | Path) -> list[RunRecord]:
    path = Path(path)
    if not path.exists():
        raise UsageError(f"no record file at {path}")
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(RunRecord.from_dict(json.loads(line)))
    return records


def format_float(x: float) -> str:
    if x is None or (isinstance(x, float) and not math.isfinite(x)):
        return "nan"
    return f"{x:.12g}"


def write_summary(path: str | Path, aggregates: list[AggregateResult]) -> None:
    """CSV of per-family test aggregates; byte-stable for identical runs."""
    lines = ["family,config,mean_mae,std_mae,mean_mse,diverged_count"]
    for agg in aggregates:
        config = config_key(agg.config).replace('"', '""')
        lines.append(
            f'{agg.family},"{config}",{format_float(agg.mean_mae)},'
            f"{format_float(agg.std_mae)},{format_float(agg.mean_mse)},{agg.diverged_count}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
