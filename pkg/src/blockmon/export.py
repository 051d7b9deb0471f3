"""Deterministic CSV / SVG / JSON writers."""
from __future__ import annotations

import csv
import json
from html import escape
from pathlib import Path

import numpy as np

from .errors import InputError
from .evaluation import ContributionMap
from .fusion import FusionSeries


def fmt(x) -> str:
    """Nine significant digits, so output diffs stay stable."""
    return format(float(x), ".9g")


def write_monitor_csv(series: FusionSeries, path) -> None:
    header = ["sample", "time_min"]
    for name in series.block_names:
        header += [f"{name}_t2", f"{name}_post"]
    header += ["bic", "alarm"]
    alarm = series.alarm
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(series.n):
            row = [str(i), fmt(series.time_min[i])]
            for b in range(len(series.block_names)):
                row += [fmt(series.t2[i, b]), fmt(series.posterior[i, b])]
            row += [fmt(series.bic[i]), "1" if alarm[i] else "0"]
            w.writerow(row)


def read_index_column(path, column="bic") -> np.ndarray:
    """Read one numeric column from a monitoring CSV."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or column not in rows[0]:
        raise InputError(f"{path}: no {column!r} column")
    return np.array([float(r[column]) for r in rows])


def write_contrib_csv(cmap: ContributionMap, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample", "time_min", *cmap.variables])
        for i, t in enumerate(cmap.times):
            w.writerow([str(int(t)), fmt(t * cmap.sample_period_min),
                        *(fmt(v) for v in cmap.values[i])])


def contrib_svg(cmap: ContributionMap, cell_w=4, cell_h=14, label_w=90, label_h=40) -> str:
    """Grayscale heatmap: one row per variable, one column per sample.

    0 maps to white and 1 to black.
    """
    n_t, n_v = cmap.values.shape
    width = label_w + n_t * cell_w + 10
    height = label_h + n_v * cell_h + 30
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="10">',
        f'<title>{escape(cmap.block_name)} contributions</title>',
        f'<text x="{label_w}" y="14" font-size="12">{escape(cmap.block_name)}</text>',
    ]
    for j, tag in enumerate(cmap.variables):
        y = label_h + j * cell_h
        out.append(f'<text x="{label_w - 4}" y="{y + cell_h - 3}" text-anchor="end">'
                   f'{escape(tag)}</text>')
        for i in range(n_t):
            v = min(1.0, max(0.0, float(cmap.values[i, j])))
            g = round(255 * (1.0 - v))
            out.append(f'<rect x="{label_w + i * cell_w}" y="{y}" width="{cell_w}" '
                       f'height="{cell_h}" fill="rgb({g},{g},{g})"/>')
    # one time label per ~200 px
    step = max(1, n_t // max(1, (n_t * cell_w) // 200))
    base_y = label_h + n_v * cell_h + 14
    for i in range(0, n_t, step):
        t = cmap.times[i] * cmap.sample_period_min
        out.append(f'<text x="{label_w + i * cell_w}" y="{base_y}">{fmt(t)}</text>')
    out.append(f'<text x="{label_w}" y="{base_y + 12}">time (min)</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_contrib_svg(cmap: ContributionMap, path) -> None:
    Path(path).write_text(contrib_svg(cmap), encoding="utf-8")


def write_json(doc, path) -> None:
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def write_summary_csv(rows: list[dict], path) -> None:
    cols = ["fault_id", "fdr_sample", "fdr_confirmed", "far", "detection_delay_min",
            "first_alarm_block", "error"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow(["" if r.get(c) is None else
                        (fmt(r[c]) if isinstance(r[c], float) else str(r[c])) for c in cols])
