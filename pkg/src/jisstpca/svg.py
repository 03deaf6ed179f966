"""Minimal SVG line plots (no plotting dependency)."""

from html import escape

import numpy as np

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"]


def _ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    return np.linspace(lo, hi, n)


def line_plot(
    path,
    series,
    title="",
    xlabel="",
    ylabel="",
    errors=None,
    vlines=None,
    width=520,
    height=360,
):
    """Write an SVG line chart.

    Parameters
    ----------
    series : dict
        ``label -> (x, y)``.
    errors : dict, optional
        ``label -> half-widths`` drawn as vertical error bars.
    vlines : dict, optional
        ``label -> x`` reference lines.
    """
    errors = errors or {}
    vlines = vlines or {}
    ml, mr, mt, mb = 60, 130, 30, 45
    pw, ph = width - ml - mr, height - mt - mb
    xs = np.concatenate([np.asarray(x, float) for x, _ in series.values()] + [np.asarray(list(vlines.values()), float)])
    ys = []
    for label, (_, y) in series.items():
        y = np.asarray(y, float)
        e = np.asarray(errors.get(label, np.zeros_like(y)), float)
        ys.extend([y - e, y + e])
    ys = np.concatenate(ys)
    x0, x1 = float(np.nanmin(xs)), float(np.nanmax(xs))
    y0, y1 = min(0.0, float(np.nanmin(ys))), float(np.nanmax(ys))
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0

    def sx(x):
        return ml + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return mt + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{ml + pw / 2}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        out.append(f'<text x="{sx(t):.1f}" y="{mt + ph + 15}" text-anchor="middle">{t:.3g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<text x="{ml - 5}" y="{sy(t) + 4:.1f}" text-anchor="end">{t:.3g}</text>')
        out.append(f'<line x1="{ml}" y1="{sy(t):.1f}" x2="{ml + pw}" y2="{sy(t):.1f}" stroke="#eee"/>')
    out.append(f'<text x="{ml + pw / 2}" y="{height - 8}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="14" y="{mt + ph / 2}" text-anchor="middle" transform="rotate(-90 14 {mt + ph / 2})">{escape(ylabel)}</text>'
    )
    for i, (label, xv) in enumerate(vlines.items()):
        c = PALETTE[(i + 1) % len(PALETTE)]
        out.append(
            f'<line x1="{sx(xv):.1f}" y1="{mt}" x2="{sx(xv):.1f}" y2="{mt + ph}" stroke="{c}" stroke-dasharray="4 3"/>'
        )
    for i, (label, (x, y)) in enumerate(series.items()):
        c = PALETTE[i % len(PALETTE)]
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        pts = " ".join(f"{sx(a):.1f},{sy(b):.1f}" for a, b in zip(x, y))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{c}" stroke-width="1.8"/>')
        e = errors.get(label)
        for j, (a, b) in enumerate(zip(x, y)):
            out.append(f'<circle cx="{sx(a):.1f}" cy="{sy(b):.1f}" r="2.5" fill="{c}"/>')
            if e is not None:
                out.append(
                    f'<line x1="{sx(a):.1f}" y1="{sy(b - e[j]):.1f}" x2="{sx(a):.1f}" y2="{sy(b + e[j]):.1f}" stroke="{c}"/>'
                )
        ly = mt + 14 * i + 6
        out.append(f'<line x1="{ml + pw + 10}" y1="{ly}" x2="{ml + pw + 28}" y2="{ly}" stroke="{c}" stroke-width="2"/>')
        out.append(f'<text x="{ml + pw + 32}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
