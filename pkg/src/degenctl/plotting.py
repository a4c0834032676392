"""Minimal deterministic SVG line plots (no plotting library involved).

Output depends only on the input numbers: fixed 800x600 viewBox, fixed
number formatting, series drawn in input order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

from .errors import InvalidInputError

WIDTH, HEIGHT = 800, 600
MARGIN = dict(left=90, right=190, top=50, bottom=70)
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b")


@dataclass(frozen=True)
class Series:
    label: str
    x: tuple
    y: tuple


@dataclass(frozen=True)
class Axes:
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    xlog: bool = False
    ylog: bool = False


def _validate(series, axes):
    if not series:
        raise InvalidInputError("emit_svg needs at least one series")
    bad = []
    for si, s in enumerate(series):
        if len(s.x) != len(s.y) or not s.x:
            raise InvalidInputError(f"series {si} ({s.label!r}) is empty or ragged")
        for pi, (x, y) in enumerate(zip(s.x, s.y)):
            ok = math.isfinite(x) and math.isfinite(y)
            ok = ok and not (axes.xlog and x <= 0) and not (axes.ylog and y <= 0)
            if not ok:
                bad.append((si, pi))
    if bad:
        raise InvalidInputError(f"non-finite or non-positive-on-log-axis values at (series, point) {bad}")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float, log: bool) -> str:
    return f"1e{round(v):d}" if log else f"{v:.3g}"


def _ticks(lo, hi, log):
    if log:
        a, b = math.floor(lo), math.ceil(hi)
        step = max(1, (b - a) // 8 + 1) if b > a else 1
        return [float(v) for v in range(a, b + 1, step) if lo - 1e-9 <= v <= hi + 1e-9]
    if hi == lo:
        return [lo]
    raw = (hi - lo) / 5
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    out, v = [], start
    while v <= hi + 1e-12 * abs(hi) and len(out) < 12:
        out.append(v)
        v += step
    return out


def emit_svg(series, axes: Axes | None = None) -> str:
    """Render labeled (x, y) series as an SVG document string."""
    axes = axes or Axes()
    series = [s if isinstance(s, Series) else Series(*s) for s in series]
    _validate(series, axes)
    tx = (lambda v: math.log10(v)) if axes.xlog else float
    ty = (lambda v: math.log10(v)) if axes.ylog else float
    xs = [tx(v) for s in series for v in s.x]
    ys = [ty(v) for s in series for v in s.y]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(v):
        return MARGIN["left"] + (v - x0) / (x1 - x0) * pw

    def py(v):
        return MARGIN["top"] + ph - (v - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" '
        f'width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
        f'fill="none" stroke="black"/>',
    ]
    for v in _ticks(x0, x1, axes.xlog):
        X = _fmt(px(v))
        out.append(f'<line x1="{X}" y1="{MARGIN["top"] + ph}" x2="{X}" y2="{MARGIN["top"] + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{X}" y="{MARGIN["top"] + ph + 20}" text-anchor="middle">'
                   f'{_tick_label(v, axes.xlog)}</text>')
    for v in _ticks(y0, y1, axes.ylog):
        Y = _fmt(py(v))
        out.append(f'<line x1="{MARGIN["left"] - 5}" y1="{Y}" x2="{MARGIN["left"]}" y2="{Y}" stroke="black"/>')
        out.append(f'<text x="{MARGIN["left"] - 8}" y="{Y}" text-anchor="end" dominant-baseline="middle">'
                   f'{_tick_label(v, axes.ylog)}</text>')
    if axes.title:
        out.append(f'<text x="{WIDTH // 2}" y="28" text-anchor="middle" font-size="16">{escape(axes.title)}</text>')
    if axes.xlabel:
        out.append(f'<text x="{MARGIN["left"] + pw // 2}" y="{HEIGHT - 20}" text-anchor="middle">{escape(axes.xlabel)}</text>')
    if axes.ylabel:
        cy = MARGIN["top"] + ph // 2
        out.append(f'<text x="22" y="{cy}" text-anchor="middle" transform="rotate(-90 22 {cy})">{escape(axes.ylabel)}</text>')
    for i, s in enumerate(series):
        color = COLORS[i % len(COLORS)]
        pts = [(px(tx(a)), py(ty(b))) for a, b in zip(s.x, s.y)]
        coords = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in pts)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{coords}"/>')
        for a, b in pts:
            out.append(f'<circle cx="{_fmt(a)}" cy="{_fmt(b)}" r="3" fill="{color}"/>')
        ly = MARGIN["top"] + 20 + 20 * i
        lx = WIDTH - MARGIN["right"] + 15
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 25}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 32}" y="{ly}" dominant-baseline="middle">{escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
