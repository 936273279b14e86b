"""Result reporting: ranked tables, a best-model bar chart, and per-family
hyperparameter sweep panels.  Charts are written as plain SVG text so the
outputs are static files with no plotting dependency; every number shown is
recomputed from the record file, never read from a previous summary.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .bench import AggregateResult, RunRecord, aggregate, config_key
from .errors import DataError

_FONT = 'font-family="Helvetica,Arial,sans-serif"'
_BAR_FILL = "#4878a8"
_POINT_FILL = "#a84848"


def test_aggregates(records: list[RunRecord]) -> list[AggregateResult]:
    """Recompute per-family aggregates from test-phase records."""
    test_records = [r for r in records if r.phase == "test"]
    if not test_records:
        raise DataError("no test-phase records found")
    by_family: dict[str, list[RunRecord]] = {}
    for record in test_records:
        by_family.setdefault(record.family, []).append(record)
    aggregates = [aggregate(group) for group in by_family.values()]
    aggregates.sort(key=lambda a: a.mean_mae)
    return aggregates


def ranking_table(aggregates: list[AggregateResult]) -> str:
    header = f"{'rank':>4}  {'family':<10}  {'mean_mae':>12}  {'std_mae':>12}  {'mean_mse':>12}  {'runs':>5}  {'excluded':>8}"
    lines = [header, "-" * len(header)]
    for rank, agg in enumerate(aggregates, start=1):
        lines.append(
            f"{rank:>4}  {agg.family:<10}  {agg.mean_mae:>12.6g}  {agg.std_mae:>12.6g}  "
            f"{agg.mean_mse:>12.6g}  {agg.count:>5}  {agg.diverged_count:>8}"
        )
    excluded = sum(a.diverged_count for a in aggregates)
    if excluded:
        lines.append(f"note: {excluded} diverged run(s) excluded from the means above")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# SVG primitives


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _ticks(upper: float, count: int = 5) -> list[float]:
    if upper <= 0:
        upper = 1.0
    return [upper * k / (count - 1) for k in range(count)]


def _fmt(v: float) -> str:
    return f"{v:.3g}"


def render_bar_chart(labels: list[str], means: list[float], stds: list[float],
                     title: str, ylabel: str = "MAE") -> str:
    width, height = max(420, 90 * len(labels) + 120), 340
    left, right, top, bottom = 70, 20, 46, 60
    plot_w, plot_h = width - left - right, height - top - bottom
    upper = max(m + s for m, s in zip(means, stds)) * 1.15 if means else 1.0
    if upper <= 0:
        upper = 1.0

    def y(v: float) -> float:
        return top + plot_h * (1 - v / upper)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="22" text-anchor="middle" {_FONT} font-size="14">{_esc(title)}</text>',
        f'<text x="16" y="{top + plot_h / 2}" text-anchor="middle" {_FONT} font-size="11" '
        f'transform="rotate(-90 16 {top + plot_h / 2})">{_esc(ylabel)}</text>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="black"/>',
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" y2="{top + plot_h}" stroke="black"/>',
    ]
    for tick in _ticks(upper):
        ty = y(tick)
        parts.append(f'<line x1="{left - 4}" y1="{ty:.1f}" x2="{left}" y2="{ty:.1f}" stroke="black"/>')
        parts.append(
            f'<text x="{left - 8}" y="{ty + 4:.1f}" text-anchor="end" {_FONT} font-size="10">{_fmt(tick)}</text>'
        )
    slot = plot_w / max(1, len(labels))
    bar_w = slot * 0.55
    for k, (label, mean, std) in enumerate(zip(labels, means, stds)):
        cx = left + slot * (k + 0.5)
        parts.append(
            f'<rect x="{cx - bar_w / 2:.1f}" y="{y(mean):.1f}" width="{bar_w:.1f}" '
            f'height="{top + plot_h - y(mean):.1f}" fill="{_BAR_FILL}"/>'
        )
        if std > 0:
            y_hi, y_lo = y(min(mean + std, upper)), y(max(mean - std, 0.0))
            parts.append(f'<line x1="{cx:.1f}" y1="{y_hi:.1f}" x2="{cx:.1f}" y2="{y_lo:.1f}" stroke="black"/>')
            for yy in (y_hi, y_lo):
                parts.append(
                    f'<line x1="{cx - 5:.1f}" y1="{yy:.1f}" x2="{cx + 5:.1f}" y2="{yy:.1f}" stroke="black"/>'
                )
        parts.append(
            f'<text x="{cx:.1f}" y="{top + plot_h + 16}" text-anchor="middle" {_FONT} '
            f'font-size="10">{_esc(label)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)


def write_best_model_chart(path: str | Path, aggregates: list[AggregateResult],
                           title: str = "Best-configuration test MAE by family") -> None:
    svg = render_bar_chart(
        [a.family for a in aggregates],
        [a.mean_mae for a in aggregates],
        [a.std_mae for a in aggregates],
        title=title,
    )
    Path(path).write_text(svg, encoding="utf-8")


# ---------------------------------------------------------------------------
# hyperparameter sweep panels


def hpo_sweeps(records: list[RunRecord], family: str):
    """Per hyperparameter: mean/std of MAE for each value, marginalized over
    every other hyperparameter.  Returns [(hp_name, [(label, mean, std)])]."""
    group = [r for r in records if r.family == family and r.phase == "validation" and not r.diverged]
    if not group:
        return []
    names = sorted({name for r in group for name in r.config})
    sweeps = []
    for name in names:
        by_value: dict[str, list[float]] = {}
        for record in group:
            label = str(record.config.get(name))
            by_value.setdefault(label, []).append(record.mae)
        points = [
            (label, float(np.mean(values)), float(np.std(values)))
            for label, values in sorted(by_value.items(), key=lambda kv: _value_sort_key(kv[0]))
        ]
        sweeps.append((name, points))
    return sweeps


def _value_sort_key(label: str):
    try:
        return (0, float(label), label)
    except ValueError:
        return (1, 0.0, label)


def render_hpo_panels(rows) -> str:
    """Grid of panels: one row per family, one panel per hyperparameter."""
    panel_w, panel_h = 210, 170
    margin = 18
    label_w = 90
    cols = max((len(sweeps) for _, sweeps in rows), default=1)
    width = label_w + cols * (panel_w + margin) + margin
    height = margin + len(rows) * (panel_h + margin)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for row_idx, (family, sweeps) in enumerate(rows):
        oy = margin + row_idx * (panel_h + margin)
        parts.append(
            f'<text x="10" y="{oy + panel_h / 2}" {_FONT} font-size="12">{_esc(family)}</text>'
        )
        for col_idx, (hp_name, points) in enumerate(sweeps):
            ox = label_w + col_idx * (panel_w + margin)
            parts.append(_render_panel(ox, oy, panel_w, panel_h, hp_name, points))
    parts.append("</svg>")
    return "\n".join(parts)


def _render_panel(ox, oy, w, h, hp_name, points) -> str:
    left, bottom, top = 44, 34, 10
    plot_w, plot_h = w - left - 8, h - top - bottom
    upper = max((m + s for _, m, s in points), default=1.0) * 1.15
    lower = min((max(m - s, 0.0) for _, m, s in points), default=0.0) * 0.85
    if upper <= lower:
        upper = lower + 1.0

    def y(v: float) -> float:
        return oy + top + plot_h * (1 - (v - lower) / (upper - lower))

    parts = [
        f'<rect x="{ox}" y="{oy}" width="{w}" height="{h}" fill="none" stroke="#cccccc"/>',
        f'<line x1="{ox + left}" y1="{oy + top}" x2="{ox + left}" y2="{oy + top + plot_h}" stroke="black"/>',
        f'<line x1="{ox + left}" y1="{oy + top + plot_h}" x2="{ox + left + plot_w}" y2="{oy + top + plot_h}" stroke="black"/>',
        f'<text x="{ox + left + plot_w / 2}" y="{oy + h - 4}" text-anchor="middle" {_FONT} font-size="10">{_esc(hp_name)}</text>',
    ]
    for tick in (lower, (lower + upper) / 2, upper):
        parts.append(
            f'<text x="{ox + left - 4}" y="{y(tick) + 3:.1f}" text-anchor="end" {_FONT} font-size="8">{_fmt(tick)}</text>'
        )
    slot = plot_w / max(1, len(points))
    for k, (label, mean, std) in enumerate(points):
        cx = ox + left + slot * (k + 0.5)
        if std > 0:
            y_hi, y_lo = y(min(mean + std, upper)), y(max(mean - std, lower))
            parts.append(f'<line x1="{cx:.1f}" y1="{y_hi:.1f}" x2="{cx:.1f}" y2="{y_lo:.1f}" stroke="black"/>')
            for yy in (y_hi, y_lo):
                parts.append(f'<line x1="{cx - 3:.1f}" y1="{yy:.1f}" x2="{cx + 3:.1f}" y2="{yy:.1f}" stroke="black"/>')
        parts.append(f'<circle cx="{cx:.1f}" cy="{y(mean):.1f}" r="3" fill="{_POINT_FILL}"/>')
        parts.append(
            f'<text x="{cx:.1f}" y="{oy + top + plot_h + 12}" text-anchor="middle" {_FONT} font-size="8">{_esc(label)}</text>'
        )
    return "\n".join(parts)
