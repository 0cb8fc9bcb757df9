"""Self-contained SVG log-log plots (scatter plus fitted line), no plotting library."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

W, H = 480, 360
ML, MR, MT, MB = 70, 20, 40, 55


def _decades(lo: float, hi: float) -> list[float]:
    a, b = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
    return [10.0 ** k for k in range(a, b + 1)]


def loglog_svg(x, y, slope: float | None = None, intercept: float | None = None,
               title: str = "", xlabel: str = "alpha", ylabel: str = "") -> str:
    x, y = np.asarray(x, float), np.abs(np.asarray(y, float))
    keep = (x > 0) & (y > 0)
    x, y = x[keep], y[keep]
    if len(x) == 0:
        return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}">'
                f'<text x="20" y="30">{escape(title)}: no positive data</text></svg>\n')
    lx, ly = np.log10(x), np.log10(y)
    x0, x1 = lx.min() - 0.1, lx.max() + 0.1
    y0, y1 = ly.min() - 0.2, ly.max() + 0.2

    def px(v):
        return ML + (v - x0) / (x1 - x0) * (W - ML - MR)

    def py(v):
        return H - MB - (v - y0) / (y1 - y0) * (H - MT - MB)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<rect x="{ML}" y="{MT}" width="{W - ML - MR}" height="{H - MT - MB}" '
           f'fill="none" stroke="black"/>']
    for t in _decades(10 ** x0, 10 ** x1):
        v = math.log10(t)
        if x0 <= v <= x1:
            out.append(f'<line x1="{px(v):.1f}" y1="{H - MB}" x2="{px(v):.1f}" y2="{H - MB + 5}" '
                       f'stroke="black"/><text x="{px(v):.1f}" y="{H - MB + 18}" '
                       f'text-anchor="middle">{t:g}</text>')
    for t in _decades(10 ** y0, 10 ** y1):
        v = math.log10(t)
        if y0 <= v <= y1:
            out.append(f'<line x1="{ML - 5}" y1="{py(v):.1f}" x2="{ML}" y2="{py(v):.1f}" '
                       f'stroke="black"/><text x="{ML - 8}" y="{py(v) + 4:.1f}" '
                       f'text-anchor="end">{t:g}</text>')
    if slope is not None and intercept is not None:
        # intercept is in natural-log units, as returned by fit_loglog
        f = lambda v: (slope * v * math.log(10) + intercept) / math.log(10)
        out.append(f'<line x1="{px(x0):.1f}" y1="{py(f(x0)):.1f}" x2="{px(x1):.1f}" '
                   f'y2="{py(f(x1)):.1f}" stroke="#c33" stroke-width="1.5" '
                   f'clip-path="url(#plot)"/>')
        out.insert(1, f'<defs><clipPath id="plot"><rect x="{ML}" y="{MT}" '
                      f'width="{W - ML - MR}" height="{H - MT - MB}"/></clipPath></defs>')
    for a, b in zip(lx, ly):
        out.append(f'<circle cx="{px(a):.1f}" cy="{py(b):.1f}" r="4" fill="#236"/>')
    label = escape(title) + (f" (slope {slope:.3f})" if slope is not None else "")
    out.append(f'<text x="{W / 2}" y="22" text-anchor="middle" font-size="13">{label}</text>')
    out.append(f'<text x="{(ML + W - MR) / 2}" y="{H - 12}" text-anchor="middle">'
               f'{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{(MT + H - MB) / 2}" text-anchor="middle" '
               f'transform="rotate(-90 16 {(MT + H - MB) / 2})">{escape(ylabel)}</text>')
    out.append("</svg>\n")
    return "\n".join(out)
