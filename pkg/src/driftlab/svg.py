"""Dependency-free SVG output: line plots and margin heat maps.

Reports want small deterministic vector files that diff cleanly, so
coordinates are emitted at fixed precision, styling is inline, and nothing
depends on a plotting library.
"""

from __future__ import annotations

import math

__all__ = ["line_plot", "margin_heatmap"]

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
_MARGIN = {"left": 72, "right": 24, "top": 40, "bottom": 48}


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _ticks(lo: float, hi: float, n: int = 5) -> list:
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def line_plot(
    series,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    log_x: bool = False,
    log_y: bool = False,
    width: int = 720,
    height: int = 440,
) -> str:
    """series: list of (label, xs, ys) triples; returns the SVG text."""
    if not series:
        raise ValueError("need at least one series")

    def tx(x):
        return math.log10(x) if log_x else float(x)

    def ty(y):
        return math.log10(y) if log_y else float(y)

    all_x = [tx(x) for _, xs, _ in series for x in xs]
    all_y = [ty(y) for _, _, ys in series for y in ys]
    if not all_x:
        raise ValueError("series are empty")
    x_lo, x_hi = min(all_x), max(all_x)
    y_lo, y_hi = min(all_y), max(all_y)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pw = width - _MARGIN["left"] - _MARGIN["right"]
    ph = height - _MARGIN["top"] - _MARGIN["bottom"]

    def px(x):
        return _MARGIN["left"] + (tx(x) - x_lo) / (x_hi - x_lo) * pw

    def py(y):
        return _MARGIN["top"] + (1.0 - (ty(y) - y_lo) / (y_hi - y_lo)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="monospace" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(
            f'<text x="{width / 2:.0f}" y="20" text-anchor="middle" '
            f'font-size="14">{_esc(title)}</text>'
        )
    # frame and ticks
    x0, y0 = _MARGIN["left"], _MARGIN["top"] + ph
    out.append(
        f'<rect x="{x0}" y="{_MARGIN["top"]}" width="{pw}" height="{ph}" '
        f'fill="none" stroke="#333"/>'
    )
    for t in _ticks(x_lo, x_hi):
        xp = _MARGIN["left"] + (t - x_lo) / (x_hi - x_lo) * pw
        label = 10.0**t if log_x else t
        out.append(f'<line x1="{_fmt(xp)}" y1="{y0}" x2="{_fmt(xp)}" y2="{y0 + 5}" stroke="#333"/>')
        out.append(
            f'<text x="{_fmt(xp)}" y="{y0 + 18}" text-anchor="middle">{label:.4g}</text>'
        )
    for t in _ticks(y_lo, y_hi):
        yp = _MARGIN["top"] + (1.0 - (t - y_lo) / (y_hi - y_lo)) * ph
        label = 10.0**t if log_y else t
        out.append(f'<line x1="{x0 - 5}" y1="{_fmt(yp)}" x2="{x0}" y2="{_fmt(yp)}" stroke="#333"/>')
        out.append(
            f'<text x="{x0 - 8}" y="{_fmt(yp + 4)}" text-anchor="end">{label:.4g}</text>'
        )
    if xlabel:
        out.append(
            f'<text x="{_MARGIN["left"] + pw / 2:.0f}" y="{height - 8}" '
            f'text-anchor="middle">{_esc(xlabel)}</text>'
        )
    if ylabel:
        yc = _MARGIN["top"] + ph / 2
        out.append(
            f'<text x="14" y="{yc:.0f}" text-anchor="middle" '
            f'transform="rotate(-90 14 {yc:.0f})">{_esc(ylabel)}</text>'
        )
    for i, (label, xs, ys) in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(xs, ys))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        if label:
            ly = _MARGIN["top"] + 14 + 16 * i
            lx = _MARGIN["left"] + pw - 8
            out.append(
                f'<text x="{lx}" y="{ly}" text-anchor="end" fill="{color}">{_esc(label)}</text>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _heat_color(v: float, lo: float, hi: float) -> str:
    # diverging scale around 0: red for negative margins, blue for positive
    if v != v:
        return "#bbbbbb"
    span = max(abs(lo), abs(hi), 1e-300)
    t = max(-1.0, min(1.0, v / span))
    if t >= 0.0:
        r, g, b = int(255 * (1 - t)), int(255 * (1 - 0.55 * t)), 255
    else:
        r, g, b = 255, int(255 * (1 + 0.55 * t)), int(255 * (1 + t))
    return f"#{r:02x}{g:02x}{b:02x}"


def margin_heatmap(
    values,
    row_labels,
    col_labels,
    title: str = "",
    cell: int = 46,
) -> str:
    """values: rows x cols of floats (NaN allowed); color centered at zero."""
    rows = [list(map(float, row)) for row in values]
    if not rows or len(rows) != len(row_labels) or len(rows[0]) != len(col_labels):
        raise ValueError("values shape must match the label lists")
    flat = [v for row in rows for v in row if v == v]
    lo, hi = (min(flat), max(flat)) if flat else (0.0, 1.0)
    left, top = 110, 56
    width = left + cell * len(col_labels) + 24
    height = top + cell * len(rows) + 24
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="monospace" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(
            f'<text x="{width / 2:.0f}" y="18" text-anchor="middle" '
            f'font-size="13">{_esc(title)}</text>'
        )
    for j, lab in enumerate(col_labels):
        xc = left + cell * j + cell / 2
        out.append(f'<text x="{xc:.0f}" y="{top - 8}" text-anchor="middle">{_esc(str(lab))}</text>')
    for i, (lab, row) in enumerate(zip(row_labels, rows)):
        yc = top + cell * i + cell / 2
        out.append(
            f'<text x="{left - 8}" y="{yc + 4:.0f}" text-anchor="end">{_esc(str(lab))}</text>'
        )
        for j, v in enumerate(row):
            x, y = left + cell * j, top + cell * i
            out.append(
                f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" '
                f'fill="{_heat_color(v, lo, hi)}" stroke="#333"/>'
            )
            text = "nan" if v != v else f"{v:.2g}"
            out.append(
                f'<text x="{x + cell / 2:.0f}" y="{y + cell / 2 + 4:.0f}" '
                f'text-anchor="middle">{text}</text>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"
