"""Self-contained SVG rendering of the normalized statistics.

Two stacked panels, ``|t| / tau_t`` and ``A^2 / tau_A`` against the time
sample index, each with the rejection line at 1. Long traces are reduced to
per-bucket maxima so peaks survive.
"""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

WIDTH = 760
PANEL_H = 220
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 60, 20, 28, 36
MAX_POINTS = 1500


def _bucket_max(values, max_points=MAX_POINTS):
    n = values.size
    if n <= max_points:
        return np.arange(n), values
    edges = np.linspace(0, n, max_points + 1).astype(int)
    idx = np.array([lo + int(np.argmax(values[lo:hi])) for lo, hi in zip(edges[:-1], edges[1:])])
    return idx, values[idx]


def _panel(values, title, y0, color):
    values = np.where(np.isfinite(values), values, 0.0)
    n = values.size
    top = max(1.25, float(values.max()) * 1.05) if n else 1.25
    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = PANEL_H - MARGIN_T - MARGIN_B

    def sx(i):
        return MARGIN_L + (plot_w * i / max(n - 1, 1))

    def sy(v):
        return y0 + MARGIN_T + plot_h * (1.0 - v / top)

    idx, vals = _bucket_max(values)
    pts = " ".join(f"{sx(i):.2f},{sy(v):.2f}" for i, v in zip(idx, vals))
    out = [
        f'<text x="{MARGIN_L}" y="{y0 + 18}" font-size="13">{escape(title)}</text>',
        f'<rect x="{MARGIN_L}" y="{y0 + MARGIN_T}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="#444" stroke-width="1"/>',
        f'<line x1="{MARGIN_L}" y1="{sy(1.0):.2f}" x2="{MARGIN_L + plot_w}" y2="{sy(1.0):.2f}" '
        'stroke="#c00" stroke-dasharray="5,4" stroke-width="1"/>',
        f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1"/>',
    ]
    for frac in (0.0, 0.5, 1.0):
        v = top * frac
        out.append(f'<text x="{MARGIN_L - 6}" y="{sy(v) + 4:.2f}" font-size="10" '
                   f'text-anchor="end">{v:.2f}</text>')
    for frac in (0.0, 0.5, 1.0):
        i = (n - 1) * frac
        out.append(f'<text x="{sx(i):.2f}" y="{y0 + PANEL_H - MARGIN_B + 14}" font-size="10" '
                   f'text-anchor="middle">{int(round(i))}</text>')
    out.append(f'<text x="{MARGIN_L + plot_w / 2:.2f}" y="{y0 + PANEL_H - 6}" font-size="10" '
               'text-anchor="middle">time sample</text>')
    return out


def statistics_svg(report, title=None) -> str:
    """SVG document for an :class:`~adla.assess.AssessmentReport`."""
    if report.t_abs is None:
        raise ValueError("report carries no per-sample data")
    head = title or f"n = {report.n_traces_used} traces per set"
    body = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{2 * PANEL_H + 24}" '
        f'viewBox="0 0 {WIDTH} {2 * PANEL_H + 24}" font-family="sans-serif">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="16" font-size="14" text-anchor="middle">{escape(head)}</text>',
    ]
    body += _panel(report.t_norm, "TVLA  |t| / tau_t", 24, "#1f4e9c")
    body += _panel(report.a2_norm, "ADLA  A^2 / tau_A", 24 + PANEL_H, "#1c7c3a")
    body.append("</svg>")
    return "\n".join(body) + "\n"
