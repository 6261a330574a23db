"""Dependency-free static SVG charts.

Two visual forms: a grouped per-class accuracy bar chart (real data in
blue, model in red, sorted worst gap first) and simple line charts for
the NAS fraction curve and sweep results. Output bytes are a pure
function of the input data: coordinates are formatted to fixed
precision and nothing carries timestamps.

Bars are the only <rect> elements emitted, so a K-class chart contains
exactly 2*K rects.
"""

from __future__ import annotations

import math

REAL_COLOR = "#1f77b4"  # blue, per the per-class figure convention
MODEL_COLOR = "#d62728"  # red

WIDTH, HEIGHT = 640, 360
MARGIN_LEFT, MARGIN_RIGHT = 60, 20
MARGIN_TOP, MARGIN_BOTTOM = 40, 50
PLOT_W = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
PLOT_H = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM


def _f(x: float) -> str:
    return f"{x:.2f}"


def _header(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<text x="{WIDTH / 2:.0f}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>',
    ]


def _axes(y_label: str, x_label: str) -> list[str]:
    x0, y0 = MARGIN_LEFT, MARGIN_TOP + PLOT_H
    parts = [
        f'<line x1="{x0}" y1="{MARGIN_TOP}" x2="{x0}" y2="{y0}" stroke="#333"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0 + PLOT_W}" y2="{y0}" stroke="#333"/>',
        f'<text x="{x0 + PLOT_W / 2:.0f}" y="{HEIGHT - 10}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{x_label}</text>',
        f'<text x="15" y="{MARGIN_TOP + PLOT_H / 2:.0f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 15 {MARGIN_TOP + PLOT_H / 2:.0f})">{y_label}</text>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = MARGIN_TOP + PLOT_H * (1.0 - frac)
        parts.append(
            f'<text x="{x0 - 6}" y="{_f(y + 4)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10">{frac:g}</text>'
        )
    return parts


def per_class_bar_svg(rows) -> str:
    """Grouped bars, one (real, model) pair per class.

    `rows` are mappings with class/model_acc/real_acc keys (or GapRow
    objects), already sorted by gap. NaN accuracies render as
    zero-height bars.
    """

    def get(row, *keys):
        for key in keys:
            if isinstance(row, dict) and key in row:
                return row[key]
            if hasattr(row, key):
                return getattr(row, key)
        raise KeyError(f"row has none of {keys}")

    k = len(rows)
    if k == 0:
        raise ValueError("no per-class rows to plot")
    parts = _header("Per-class accuracy: real (blue) vs model (red)")
    parts += _axes("accuracy", "class (sorted by model - real gap)")
    group_w = PLOT_W / k
    bar_w = min(24.0, group_w * 0.35)
    y0 = MARGIN_TOP + PLOT_H
    for i, row in enumerate(rows):
        cx = MARGIN_LEFT + group_w * (i + 0.5)
        for value, color, offset in (
            (get(row, "real_acc"), REAL_COLOR, -bar_w),
            (get(row, "model_acc"), MODEL_COLOR, 0.0),
        ):
            h = 0.0 if (value is None or math.isnan(value)) else max(0.0, float(value)) * PLOT_H
            parts.append(
                f'<rect x="{_f(cx + offset)}" y="{_f(y0 - h)}" '
                f'width="{_f(bar_w)}" height="{_f(h)}" fill="{color}"/>'
            )
        parts.append(
            f'<text x="{_f(cx)}" y="{y0 + 16}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="10">{get(row, "class", "class_id")}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def line_chart_svg(title: str, x_label: str, xs, series) -> str:
    """Polyline chart; `series` is a list of (label, color, ys) with ys in
    [0, 1] (values are clipped to the unit band for display)."""
    xs = [float(x) for x in xs]
    if len(xs) == 0:
        raise ValueError("no x values to plot")
    lo, hi = min(xs), max(xs)
    span = (hi - lo) or 1.0

    def px(x):
        return MARGIN_LEFT + (x - lo) / span * PLOT_W

    def py(v):
        v = min(1.0, max(0.0, float(v)))
        return MARGIN_TOP + PLOT_H * (1.0 - v)

    parts = _header(title)
    parts += _axes("accuracy", x_label)
    for x in xs:
        parts.append(
            f'<text x="{_f(px(x))}" y="{MARGIN_TOP + PLOT_H + 16}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="10">{x:g}</text>'
        )
    for idx, (label, color, ys) in enumerate(series):
        pts = " ".join(f"{_f(px(x))},{_f(py(v))}" for x, v in zip(xs, ys))
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>'
        )
        for x, v in zip(xs, ys):
            parts.append(
                f'<circle cx="{_f(px(x))}" cy="{_f(py(v))}" r="3" fill="{color}"/>'
            )
        parts.append(
            f'<text x="{WIDTH - MARGIN_RIGHT}" y="{MARGIN_TOP + 14 * (idx + 1)}" '
            f'text-anchor="end" font-family="sans-serif" font-size="11" '
            f'fill="{color}">{label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def nas_line_svg(fractions, top1s, topks, k: int) -> str:
    return line_chart_svg(
        "Accuracy vs augmentation fraction",
        "synthetic fraction added",
        fractions,
        [("top-1", "#1f77b4", top1s), (f"top-{k}", "#ff7f0e", topks)],
    )


def sweep_line_svg(grid, cas_top1, variable: str = "truncation") -> str:
    return line_chart_svg(
        f"CAS top-1 vs {variable}", variable, grid, [("cas top-1", "#1f77b4", cas_top1)]
    )
