"""Minimal deterministic SVG line plots with the plotted data embedded as comments."""

from __future__ import annotations

from typing import Sequence

import numpy as np

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _fmt(v: float) -> str:
    return f"{float(v):.6g}"


def line_plot(series: Sequence[tuple[str, Sequence[float], Sequence[float]]], title: str = "",
              xlabel: str = "", ylabel: str = "", width: int = 480, height: int = 320,
              max_points: int = 400) -> str:
    """Polylines for ``(label, xs, ys)`` triples; non-finite points break the line."""
    pad_l, pad_r, pad_t, pad_b = 60, 20, 30, 40
    all_x = np.concatenate([np.asarray(s[1], float) for s in series]) if series else np.zeros(1)
    all_y = np.concatenate([np.asarray(s[2], float) for s in series]) if series else np.zeros(1)
    fin = np.isfinite(all_x) & np.isfinite(all_y)
    x0, x1 = (all_x[fin].min(), all_x[fin].max()) if fin.any() else (0.0, 1.0)
    y0, y1 = (all_y[fin].min(), all_y[fin].max()) if fin.any() else (0.0, 1.0)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw, ph = width - pad_l - pad_r, height - pad_t - pad_b

    def px(x):
        return pad_l + (x - x0) / (x1 - x0) * pw

    def py(y):
        return pad_t + (1 - (y - y0) / (y1 - y0)) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect x="{pad_l}" y="{pad_t}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
           f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="13">{title}</text>',
           f'<text x="{width / 2:.1f}" y="{height - 8}" text-anchor="middle" font-size="11">'
           f'{xlabel}</text>',
           f'<text x="14" y="{height / 2:.1f}" text-anchor="middle" font-size="11" '
           f'transform="rotate(-90 14 {height / 2:.1f})">{ylabel}</text>']
    for v, anchor in ((x0, "start"), (x1, "end")):
        out.append(f'<text x="{px(v):.2f}" y="{pad_t + ph + 14}" text-anchor="{anchor}" '
                   f'font-size="10">{_fmt(v)}</text>')
    for v in (y0, y1):
        out.append(f'<text x="{pad_l - 4}" y="{py(v) + 3:.2f}" text-anchor="end" '
                   f'font-size="10">{_fmt(v)}</text>')
    for i, (label, xs, ys) in enumerate(series):
        xs, ys = np.asarray(xs, float), np.asarray(ys, float)
        color = _COLORS[i % len(_COLORS)]
        out.append(f"<!-- data {label}: " +
                   " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(xs, ys)) + " -->")
        step = max(1, len(xs) // max_points)
        runs, cur = [], []
        for a, b in zip(xs[::step], ys[::step]):
            if np.isfinite(a) and np.isfinite(b):
                cur.append(f"{px(a):.2f},{py(b):.2f}")
            elif cur:
                runs.append(cur)
                cur = []
        if cur:
            runs.append(cur)
        for run in runs:
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                       f'points="{" ".join(run)}"/>')
        out.append(f'<text x="{pad_l + 8}" y="{pad_t + 14 + 14 * i}" font-size="11" '
                   f'fill="{color}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
