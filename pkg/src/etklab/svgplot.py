"""Minimal self-contained SVG line plots (axes, log scales, mean/std bands).

Figures are conveniences derived from the CSV tables; this emitter avoids any
plotting dependency and produces deterministic output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

WIDTH, HEIGHT = 640, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 40, 50

PALETTE = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd",
    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
]


@dataclass
class Series:
    label: str
    x: list[float]
    y: list[float]
    y_lo: Optional[list[float]] = None
    y_hi: Optional[list[float]] = None


def _transform(vals, log: bool):
    if log:
        return [math.log10(max(v, 1e-300)) for v in vals]
    return list(vals)


def _ticks(lo: float, hi: float, log: bool):
    if log:
        lo_e, hi_e = math.floor(lo), math.ceil(hi)
        return [(e, f"1e{e}") for e in range(lo_e, hi_e + 1)]
    span = hi - lo if hi > lo else 1.0
    step = 10 ** math.floor(math.log10(span / 4))
    for mult in (1, 2, 5, 10):
        if span / (step * mult) <= 6:
            step *= mult
            break
    first = math.ceil(lo / step) * step
    out = []
    v = first
    while v <= hi + 1e-12 * span:
        out.append((v, f"{v:g}"))
        v += step
    return out


def line_plot(
    series: list[Series],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    xlog: bool = False,
    ylog: bool = False,
) -> str:
    """Render line series (with optional shaded bands) to an SVG string."""
    xs, ys = [], []
    for s in series:
        xs += _transform(s.x, xlog)
        ys += _transform(s.y, ylog)
        if s.y_lo is not None:
            ys += _transform([v for v in s.y_lo if v > 0 or not ylog], ylog)
        if s.y_hi is not None:
            ys += _transform(s.y_hi, ylog)
    if not xs:
        xs, ys = [0.0, 1.0], [0.0, 1.0]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pad_y = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad_y, y_hi + pad_y

    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B

    def px(v):
        return MARGIN_L + pw * (v - x_lo) / (x_hi - x_lo)

    def py(v):
        return MARGIN_T + ph * (1.0 - (v - y_lo) / (y_hi - y_lo))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="24" text-anchor="middle" '
        f'font-size="16" font-family="sans-serif">{title}</text>',
    ]
    # axes
    parts.append(
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" '
        'fill="none" stroke="black"/>'
    )
    for v, lab in _ticks(x_lo, x_hi, xlog):
        if not x_lo <= v <= x_hi:
            continue
        x = px(v)
        parts.append(
            f'<line x1="{x:.1f}" y1="{MARGIN_T + ph}" x2="{x:.1f}" '
            f'y2="{MARGIN_T + ph + 5}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{x:.1f}" y="{MARGIN_T + ph + 18}" text-anchor="middle" '
            f'font-size="11" font-family="sans-serif">{lab}</text>'
        )
    for v, lab in _ticks(y_lo, y_hi, ylog):
        if not y_lo <= v <= y_hi:
            continue
        y = py(v)
        parts.append(
            f'<line x1="{MARGIN_L - 5}" y1="{y:.1f}" x2="{MARGIN_L}" '
            f'y2="{y:.1f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{MARGIN_L - 8}" y="{y + 4:.1f}" text-anchor="end" '
            f'font-size="11" font-family="sans-serif">{lab}</text>'
        )
    parts.append(
        f'<text x="{MARGIN_L + pw / 2:.1f}" y="{HEIGHT - 12}" '
        f'text-anchor="middle" font-size="13" font-family="sans-serif">'
        f"{xlabel}</text>"
    )
    parts.append(
        f'<text x="16" y="{MARGIN_T + ph / 2:.1f}" text-anchor="middle" '
        f'font-size="13" font-family="sans-serif" '
        f'transform="rotate(-90 16 {MARGIN_T + ph / 2:.1f})">{ylabel}</text>'
    )
    # series
    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        tx = _transform(s.x, xlog)
        ty = _transform(s.y, ylog)
        if s.y_lo is not None and s.y_hi is not None:
            tlo = _transform(s.y_lo, ylog)
            thi = _transform(s.y_hi, ylog)
            pts = [f"{px(a):.1f},{py(b):.1f}" for a, b in zip(tx, thi)]
            pts += [
                f"{px(a):.1f},{py(b):.1f}"
                for a, b in zip(reversed(tx), list(reversed(tlo)))
            ]
            parts.append(
                f'<polygon points="{" ".join(pts)}" fill="{color}" '
                'fill-opacity="0.15" stroke="none"/>'
            )
        pts = " ".join(f"{px(a):.1f},{py(b):.1f}" for a, b in zip(tx, ty))
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" '
            'stroke-width="1.8"/>'
        )
        ly = MARGIN_T + 16 + 16 * i
        parts.append(
            f'<line x1="{MARGIN_L + pw - 130}" y1="{ly - 4}" '
            f'x2="{MARGIN_L + pw - 108}" y2="{ly - 4}" stroke="{color}" '
            'stroke-width="1.8"/>'
        )
        parts.append(
            f'<text x="{MARGIN_L + pw - 102}" y="{ly}" font-size="11" '
            f'font-family="sans-serif">{s.label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_plot(path, series: list[Series], **kwargs):
    with open(path, "w", newline="") as fh:
        fh.write(line_plot(series, **kwargs))
