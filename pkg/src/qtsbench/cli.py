"""Command-line entry point.

Commands:
    run <config.yaml>    full protocol: grid-search HPO on the validation
                         folds, then best-config evaluation on the test folds
    report <dir>         ranked table + bar chart from a results directory
    hpo-plot <dir>       per-hyperparameter MAE sweep panels
    generate <spec> <out.csv>   write a synthetic series

Exit codes: 0 ok, 1 usage/configuration error, 2 data error, 3 runtime failure.
The default output root can be set with the QTSBENCH_OUTPUT environment
variable; --output and the config file override it.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .bench import (
    SeriesContext,
    append_records,
    evaluate_best,
    grid_search,
    read_records,
    write_summary,
)
from .datagen import GeneratorSpec, generate
from .errors import ConfigurationError, DataError, UsageError
from .models import DEFAULT_GRIDS, FAMILIES
from .pipeline import FoldPurpose, RawSeries, load_csv, make_folds
from .report import (
    hpo_sweeps,
    ranking_table,
    render_hpo_panels,
    test_aggregates,
    write_best_model_chart,
)

log = logging.getLogger("qtsbench")

ENV_OUTPUT = "QTSBENCH_OUTPUT"

_TOP_LEVEL_KEYS = {
    "data", "families", "grids", "folds", "repeats", "seed",
    "output", "parallelism", "normalization", "selection_units",
}
_FOLD_KEYS = {"n_validation", "n_test", "fold_len", "train_len", "shift"}
_DATA_KEYS = {"csv", "value_column", "timestamp_column", "generator"}


@dataclass
class ExperimentConfig:
    """Validated run configuration; unknown keys are rejected up front."""

    data: dict
    families: list
    grids: dict = field(default_factory=dict)
    folds: dict = field(default_factory=dict)
    repeats: int = 10
    seed: int = 1234
    output: str | None = None
    parallelism: int = 1
    normalization: str = "full"
    selection_units: str = "original"

    @classmethod
    def from_mapping(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigurationError("config file must contain a mapping")
        unknown = set(raw) - _TOP_LEVEL_KEYS
        if unknown:
            raise ConfigurationError(f"unknown config key(s): {sorted(unknown)}")
        if "data" not in raw:
            raise ConfigurationError("config needs a 'data' entry")
        if "families" not in raw or not raw["families"]:
            raise ConfigurationError("config needs a non-empty 'families' list")

        data = raw["data"]
        if isinstance(data, str):
            data = {"csv": data}
        if not isinstance(data, dict):
            raise ConfigurationError("'data' must be a path or a mapping")
        unknown = set(data) - _DATA_KEYS
        if unknown:
            raise ConfigurationError(f"unknown data key(s): {sorted(unknown)}")
        if ("csv" in data) == ("generator" in data):
            raise ConfigurationError("'data' needs exactly one of 'csv' or 'generator'")

        families = list(raw["families"])
        for family in families:
            if family not in FAMILIES:
                raise ConfigurationError(
                    f"unknown family {family!r}; expected one of {FAMILIES}"
                )

        grids = raw.get("grids") or {}
        for family in grids:
            if family not in FAMILIES:
                raise ConfigurationError(f"grid given for unknown family {family!r}")

        folds = raw.get("folds") or {}
        unknown = set(folds) - _FOLD_KEYS
        if unknown:
            raise ConfigurationError(f"unknown fold key(s): {sorted(unknown)}")

        cfg = cls(
            data=data,
            families=families,
            grids=grids,
            folds=folds,
            repeats=int(raw.get("repeats", 10)),
            seed=int(raw.get("seed", 1234)),
            output=raw.get("output"),
            parallelism=int(raw.get("parallelism", 1)),
            normalization=raw.get("normalization", "full"),
            selection_units=raw.get("selection_units", "original"),
        )
        if cfg.repeats < 1:
            raise ConfigurationError("repeats must be at least 1")
        if cfg.parallelism < 1:
            raise ConfigurationError("parallelism must be at least 1")
        if cfg.normalization not in ("full", "train_only"):
            raise ConfigurationError("normalization must be 'full' or 'train_only'")
        if cfg.selection_units not in ("original", "normalized"):
            raise ConfigurationError("selection_units must be 'original' or 'normalized'")
        return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"no such config file: {path}")
    raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    return ExperimentConfig.from_mapping(raw)


def _load_series(data: dict) -> RawSeries:
    if "csv" in data:
        return load_csv(
            data["csv"],
            value_column=data.get("value_column", "value"),
            timestamp_column=data.get("timestamp_column"),
        )
    gen = dict(data["generator"])
    kind = str(gen.pop("kind", "")).upper()
    length = int(gen.pop("length", 750))
    seed = int(gen.pop("seed", 0))
    return generate(GeneratorSpec(kind, length, seed, gen))


def resolve_output_dir(flag_value: str | None, cfg_value: str | None) -> Path:
    if flag_value:
        return Path(flag_value)
    if cfg_value:
        return Path(cfg_value)
    root = os.environ.get(ENV_OUTPUT)
    return Path(root) / "results" if root else Path("results")


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.repeats is not None:
        cfg.repeats = args.repeats
    if args.parallelism is not None:
        cfg.parallelism = args.parallelism
    out_dir = resolve_output_dir(args.output, cfg.output)
    out_dir.mkdir(parents=True, exist_ok=True)

    series = _load_series(cfg.data)
    folds = make_folds(len(series), **cfg.folds)
    validation_folds = [f for f in folds if f.purpose == FoldPurpose.VALIDATION]
    test_folds = [f for f in folds if f.purpose == FoldPurpose.TEST]
    if not validation_folds or not test_folds:
        raise ConfigurationError("the run protocol needs both validation and test folds")

    ctx = SeriesContext(
        raw=series.values,
        normalization=cfg.normalization,
        metric_units=cfg.selection_units,
    )

    records_path = out_dir / "records.ndjson"
    records_path.write_text("", encoding="utf-8")  # fresh experiment file
    aggregates = []
    best_configs = {}
    for family in cfg.families:
        grid = cfg.grids.get(family, DEFAULT_GRIDS[family])
        log.info("%s: grid search over validation folds", family)
        best_config, val_records = grid_search(
            family, grid, ctx, validation_folds,
            repeats=cfg.repeats, seed_base=cfg.seed, parallelism=cfg.parallelism,
        )
        append_records(records_path, val_records)
        log.info("%s: evaluating best config on test folds", family)
        agg, test_records = evaluate_best(
            family, best_config, ctx, test_folds,
            repeats=cfg.repeats, seed_base=cfg.seed, parallelism=cfg.parallelism,
        )
        append_records(records_path, test_records)
        aggregates.append(agg)
        best_configs[family] = best_config
        log.info("%s: test MAE %.6g +- %.6g (%d runs, %d excluded)",
                 family, agg.mean_mae, agg.std_mae, agg.count, agg.diverged_count)

    write_summary(out_dir / "summary.csv", aggregates)
    manifest = {
        "config_sha256": hashlib.sha256(
            Path(args.config).read_bytes()
        ).hexdigest(),
        "package_version": __version__,
        "python_version": platform.python_version(),
        "numpy_version": np.__version__,
        "seed_base": cfg.seed,
        "repeats": cfg.repeats,
        "families": cfg.families,
        "folds": {
            "count": len(folds),
            "starts": [f.train_start for f in folds],
            "train_len": folds[0].train_end - folds[0].train_start,
            "eval_len": folds[0].eval_end - folds[0].eval_start,
        },
        "normalization": cfg.normalization,
        "selection_units": cfg.selection_units,
        "best_configs": best_configs,
        "series": {"name": series.name, "length": len(series)},
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(ranking_table(sorted(aggregates, key=lambda a: a.mean_mae)))
    print(f"results written to {out_dir}")
    return 0


def cmd_report(args) -> int:
    results_dir = Path(args.results_dir)
    records = read_records(results_dir / "records.ndjson")
    aggregates = test_aggregates(records)
    print(ranking_table(aggregates))
    chart_path = results_dir / "report.svg"
    write_best_model_chart(chart_path, aggregates)
    print(f"chart written to {chart_path}")
    return 0


def cmd_hpo_plot(args) -> int:
    results_dir = Path(args.results_dir)
    records = read_records(results_dir / "records.ndjson")
    present = []
    seen = set()
    for record in records:
        if record.phase == "validation" and record.family not in seen:
            seen.add(record.family)
            present.append(record.family)
    if not present:
        raise DataError("no validation-phase records found")
    wanted = args.families.split(",") if args.families else present
    rows = []
    for family in wanted:
        sweeps = hpo_sweeps(records, family)
        if not sweeps:
            print(f"notice: no validation records for {family}; panel skipped")
            continue
        rows.append((family, sweeps))
    if not rows:
        raise DataError("none of the requested families have validation records")
    chart_path = results_dir / "hpo.svg"
    chart_path.write_text(render_hpo_panels(rows), encoding="utf-8")
    print(f"hyperparameter sweep panels written to {chart_path}")
    return 0


def parse_generator_spec(text: str) -> GeneratorSpec:
    """Compact form: kind:key=value,key=value (e.g. sine:period=16,length=750)."""
    kind, _, rest = text.partition(":")
    params: dict = {}
    if rest:
        for chunk in rest.split(","):
            key, sep, value = chunk.partition("=")
            if not sep:
                raise UsageError(f"malformed generator parameter {chunk!r}")
            try:
                parsed = int(value)
            except ValueError:
                try:
                    parsed = float(value)
                except ValueError:
                    raise UsageError(f"non-numeric generator parameter {chunk!r}") from None
            params[key.strip()] = parsed
    length = int(params.pop("length", 750))
    seed = int(params.pop("seed", 0))
    return GeneratorSpec(kind.strip().upper(), length, seed, params)


def cmd_generate(args) -> int:
    spec = parse_generator_spec(args.spec)
    if args.seed is not None:
        spec = GeneratorSpec(spec.kind, spec.length, args.seed, spec.params)
    series = generate(spec)
    out = Path(args.out_csv)
    out.parent.mkdir(parents=True, exist_ok=True)
    lines = ["timestamp,value"]
    lines += [f"{t},{float(v)!r}" for t, v in zip(series.timestamps, series.values)]
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {len(series)} points to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qtsbench",
        description="Benchmark quantum and classical one-step-ahead forecasters.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run the full HPO + evaluation protocol")
    run_p.add_argument("config", help="YAML experiment config")
    run_p.add_argument("--seed", type=int, default=None)
    run_p.add_argument("--repeats", type=int, default=None)
    run_p.add_argument("--parallelism", type=int, default=None)
    run_p.add_argument("--output", default=None)
    run_p.set_defaults(handler=cmd_run)

    report_p = sub.add_parser("report", help="ranked table and bar chart")
    report_p.add_argument("results_dir")
    report_p.set_defaults(handler=cmd_report)

    hpo_p = sub.add_parser("hpo-plot", help="hyperparameter sweep panels")
    hpo_p.add_argument("results_dir")
    hpo_p.add_argument("--families", default=None, help="comma-separated subset")
    hpo_p.set_defaults(handler=cmd_hpo_plot)

    gen_p = sub.add_parser("generate", help="write a synthetic series CSV")
    gen_p.add_argument("spec", help="kind:key=value,... (random_walk, ar1, sine, sine_plus_noise)")
    gen_p.add_argument("out_csv")
    gen_p.add_argument("--seed", type=int, default=None)
    gen_p.set_defaults(handler=cmd_generate)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.handler(args)
    except (ConfigurationError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - surface anything else as runtime failure
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
