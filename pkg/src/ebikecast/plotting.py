"""Minimal dependency-free SVG line charts."""
from __future__ import annotations

import math
import os
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .errors import PlotError
from .ingest import MonthKey

WIDTH, HEIGHT = 800, 480
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 80, 20, 40, 60
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")

PlotSeries = tuple[str, Sequence[float], Sequence[float]]


def decimal_year(key: MonthKey) -> float:
    return key.year + (key.month - 1) / 12.0


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-9 * step:
        ticks.append(round(v, 10))
        v += step
    return ticks


def emit_plot(
    series_set: Sequence[PlotSeries],
    path: str | os.PathLike,
    title: str = "",
    x_label: str = "",
    y_label: str = "",
    stroke_width: float = 1.5,
) -> None:
    """Write one polyline per (label, xs, ys) series; single points become markers."""
    if not series_set:
        raise PlotError("nothing to plot")
    clean = []
    for label, xs, ys in series_set:
        x = np.asarray(xs, dtype=float)
        y = np.asarray(ys, dtype=float)
        if len(x) == 0 or len(x) != len(y):
            raise PlotError(f"series {label!r} is empty or has mismatched x/y")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise PlotError(f"series {label!r} has non-finite values")
        clean.append((label, x, y))

    xmin = min(float(x.min()) for _, x, _ in clean)
    xmax = max(float(x.max()) for _, x, _ in clean)
    ymin = min(float(y.min()) for _, _, y in clean)
    ymax = max(float(y.max()) for _, _, y in clean)
    if xmax == xmin:
        xmin, xmax = xmin - 0.5, xmax + 0.5
    if ymax == ymin:
        pad = abs(ymin) * 0.1 or 1.0
        ymin, ymax = ymin - pad, ymax + pad
    pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    ph = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def sx(v: float) -> float:
        return MARGIN_LEFT + (v - xmin) / (xmax - xmin) * pw

    def sy(v: float) -> float:
        return MARGIN_TOP + ph - (v - ymin) / (ymax - ymin) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="24" text-anchor="middle" font-size="16">{escape(title)}</text>',
        f'<g class="axes" stroke="black" stroke-width="1">'
        f'<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP + ph}" x2="{MARGIN_LEFT + pw}" y2="{MARGIN_TOP + ph}"/>'
        f'<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" y2="{MARGIN_TOP + ph}"/></g>',
    ]
    for t in _nice_ticks(xmin, xmax):
        x = _fmt(sx(t))
        out.append(
            f'<line x1="{x}" y1="{MARGIN_TOP + ph}" x2="{x}" y2="{MARGIN_TOP + ph + 5}" stroke="black"/>'
            f'<text x="{x}" y="{MARGIN_TOP + ph + 20}" text-anchor="middle" font-size="11">{t:g}</text>'
        )
    for t in _nice_ticks(ymin, ymax):
        y = _fmt(sy(t))
        out.append(
            f'<line x1="{MARGIN_LEFT - 5}" y1="{y}" x2="{MARGIN_LEFT}" y2="{y}" stroke="black"/>'
            f'<text x="{MARGIN_LEFT - 8}" y="{y}" text-anchor="end" font-size="11">{t:g}</text>'
        )
    out.append(f'<text x="{MARGIN_LEFT + pw / 2}" y="{HEIGHT - 15}" text-anchor="middle" font-size="13">{escape(x_label)}</text>')
    out.append(
        f'<text x="18" y="{MARGIN_TOP + ph / 2}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 18 {MARGIN_TOP + ph / 2})">{escape(y_label)}</text>'
    )
    for i, (label, x, y) in enumerate(clean):
        color = PALETTE[i % len(PALETTE)]
        if len(x) == 1:
            out.append(
                f'<circle cx="{_fmt(sx(x[0]))}" cy="{_fmt(sy(y[0]))}" r="3" fill="{color}">'
                f"<title>{escape(label)}</title></circle>"
            )
            continue
        pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(x, y))
        out.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="{stroke_width}" points="{pts}">'
            f"<title>{escape(label)}</title></polyline>"
        )
    out.append("</svg>")
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("\n".join(out) + "\n")
    except OSError as exc:
        raise PlotError(f"cannot write {path}: {exc}") from exc
