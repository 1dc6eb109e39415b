"""Dependency-free SVG line plots."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

from .errors import ConfigurationError
from .persist import atomic_write_text

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")
W, H = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 160, 30, 55


def _ticks(lo, hi, n=5):
    if hi == lo:
        return [lo]
    step = 10 ** math.floor(math.log10((hi - lo) / n))
    for m in (1, 2, 5, 10):
        if (hi - lo) / (m * step) <= n:
            step *= m
            break
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step + 1e-9) + 1)]


def _fmt(v):
    return f"{v:.4g}"


def render_svg(series, title="", xlabel="", ylabel=""):
    """SVG text with one polyline per ``(label, xs, ys)`` series."""
    if not series:
        raise ConfigurationError("need at least one series")
    for label, xs, ys in series:
        if len(xs) == 0 or len(xs) != len(ys):
            raise ConfigurationError(f"series {label!r}: x and y must be non-empty and equal length")
    allx = np.concatenate([np.asarray(s[1], float) for s in series])
    ally = np.concatenate([np.asarray(s[2], float) for s in series])
    x0, x1 = float(allx.min()), float(allx.max())
    y0, y1 = min(0.0, float(ally.min())), float(ally.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y1 = y0 + 1.0
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

    def px(x):
        return LEFT + (x - x0) / (x1 - x0) * pw

    def py(y):
        return TOP + ph - (y - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
           f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
           f'<line x1="{LEFT}" y1="{TOP + ph}" x2="{LEFT + pw}" y2="{TOP + ph}" stroke="black"/>',
           f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + ph}" stroke="black"/>']
    for t in _ticks(x0, x1):
        x = px(t)
        out.append(f'<line x1="{x:.2f}" y1="{TOP + ph}" x2="{x:.2f}" y2="{TOP + ph + 5}" '
                   f'stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{TOP + ph + 18}" text-anchor="middle">{_fmt(t)}</text>')
    for t in _ticks(y0, y1):
        y = py(t)
        out.append(f'<line x1="{LEFT - 5}" y1="{y:.2f}" x2="{LEFT}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 8}" y="{y + 4:.2f}" text-anchor="end">{_fmt(t)}</text>')
    if title:
        out.append(f'<text x="{LEFT + pw / 2}" y="{TOP - 10}" text-anchor="middle" '
                   f'font-size="14">{escape(title)}</text>')
    if xlabel:
        out.append(f'<text x="{LEFT + pw / 2}" y="{H - 15}" text-anchor="middle">'
                   f'{escape(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="18" y="{TOP + ph / 2}" text-anchor="middle" '
                   f'transform="rotate(-90 18 {TOP + ph / 2})">{escape(ylabel)}</text>')
    for k, (label, xs, ys) in enumerate(series):
        color = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{px(float(x)):.2f},{py(float(y)):.2f}" for x, y in zip(xs, ys))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{pts}"/>')
        ly = TOP + 10 + 20 * k
        out.append(f'<g class="legend"><line x1="{W - RIGHT + 15}" y1="{ly}" x2="{W - RIGHT + 40}" '
                   f'y2="{ly}" stroke="{color}" stroke-width="2"/>'
                   f'<text x="{W - RIGHT + 45}" y="{ly + 4}">{escape(str(label))}</text></g>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(series, path, title="", xlabel="", ylabel=""):
    atomic_write_text(path, render_svg(series, title, xlabel, ylabel))
