"""Bare-bones SVG line plots for the figure commands."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

_COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def line_plot(x, series: dict[str, np.ndarray], xlabel: str, ylabel: str,
              width: int = 640, height: int = 420) -> str:
    x = np.asarray(x, dtype=float)
    margin = 60
    ys = np.concatenate([np.asarray(v, dtype=float) for v in series.values()])
    ys = ys[np.isfinite(ys)]
    x0, x1 = float(x.min()), float(x.max())
    y0, y1 = min(0.0, float(ys.min())), float(ys.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0

    def px(v):
        return margin + (v - x0) / (x1 - x0) * (width - 2 * margin)

    def py(v):
        return height - margin - (v - y0) / (y1 - y0) * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
        f'<text x="{width / 2}" y="{height - 20}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="18" y="{height / 2}" text-anchor="middle" transform="rotate(-90 18 {height / 2})">{escape(ylabel)}</text>',
        f'<text x="{margin}" y="{height - margin + 16}" text-anchor="middle">{x0:g}</text>',
        f'<text x="{width - margin}" y="{height - margin + 16}" text-anchor="middle">{x1:g}</text>',
        f'<text x="{margin - 6}" y="{py(y1) + 4:.1f}" text-anchor="end">{y1:.3g}</text>',
        f'<text x="{margin - 6}" y="{py(y0) + 4:.1f}" text-anchor="end">{y0:.3g}</text>',
    ]
    for i, (name, y) in enumerate(series.items()):
        colour = _COLOURS[i % len(_COLOURS)]
        y = np.asarray(y, dtype=float)
        ok = np.isfinite(y)
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x[ok], y[ok]))
        parts.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{pts}"/>')
        parts.append(f'<text x="{width - margin - 4}" y="{margin + 16 * (i + 1)}" text-anchor="end" '
                     f'fill="{colour}">{escape(name)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
