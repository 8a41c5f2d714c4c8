"""Self-contained SVG of pointer displacement against M1 displacement."""
from __future__ import annotations

import math

import numpy as np

COLORS = {0: "#1b9e77", 1: "#d95f02", 2: "#7570b3"}
WIDTH, HEIGHT = 720, 540
MARGIN = dict(left=80, right=170, top=30, bottom=60)


def _nice_ticks(lo: float, hi: float, n: int = 6) -> list[float]:
    span = hi - lo
    raw = span / max(n, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * span:
        ticks.append(round(t, 10))
        t += step
    return ticks


def _marker(kind: int, x: float, y: float, color: str) -> str:
    r = 4.0
    if kind == 0:
        return f'<circle class="point" cx="{x:.2f}" cy="{y:.2f}" r="{r}" fill="{color}"/>'
    if kind == 1:
        return (
            f'<path class="point" d="M{x - r:.2f},{y - r:.2f}h{2 * r}v{2 * r}h{-2 * r}z" fill="{color}"/>'
        )
    return (
        f'<polygon class="point" points="{x:.2f},{y - r - 1:.2f} {x + r + 1:.2f},{y + r:.2f} '
        f'{x - r - 1:.2f},{y + r:.2f}" fill="{color}"/>'
    )


def figure2_svg(series: dict, gain: float, weak_values: dict, bound_x: float) -> str:
    """Scatter of framed data, dashed ideal lines and the boxed weak regime.

    ``series`` maps class id to (x_prime, displacement) arrays in um.
    """
    xs = np.concatenate([np.asarray(v[0], dtype=float) for v in series.values()] + [np.array([-bound_x, bound_x])])
    ys = np.concatenate([np.asarray(v[1], dtype=float) for v in series.values()])
    ys = ys[np.isfinite(ys)]
    xlo, xhi = float(xs.min()), float(xs.max())
    pad = 0.05 * (xhi - xlo)
    xlo, xhi = xlo - pad, xhi + pad
    lines_y = [-gain * x * float(n) for x in (xlo, xhi) for n in weak_values.values()]
    box_y = gain * bound_x
    yall = np.concatenate([ys, lines_y, [-box_y, box_y]])
    ylo, yhi = float(yall.min()), float(yall.max())
    ypad = 0.05 * (yhi - ylo)
    ylo, yhi = ylo - ypad, yhi + ypad

    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(v):
        return MARGIN["left"] + (v - xlo) / (xhi - xlo) * pw

    def sy(v):
        return MARGIN["top"] + (yhi - v) / (yhi - ylo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<path class="frame" d="M{MARGIN["left"]},{MARGIN["top"]}h{pw}v{ph}h{-pw}z" fill="white" stroke="black"/>',
    ]
    for t in _nice_ticks(xlo, xhi):
        X = sx(t)
        out.append(f'<line class="tick" x1="{X:.2f}" y1="{MARGIN["top"] + ph}" x2="{X:.2f}" y2="{MARGIN["top"] + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{X:.2f}" y="{MARGIN["top"] + ph + 20}" text-anchor="middle">{t:g}</text>')
    for t in _nice_ticks(ylo, yhi):
        Y = sy(t)
        out.append(f'<line class="tick" x1="{MARGIN["left"] - 5}" y1="{Y:.2f}" x2="{MARGIN["left"]}" y2="{Y:.2f}" stroke="black"/>')
        out.append(f'<text x="{MARGIN["left"] - 8}" y="{Y + 4:.2f}" text-anchor="end">{t:g}</text>')
    out.append(
        f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle">'
        "M1 displacement x&#8242; (&#181;m)</text>"
    )
    out.append(
        f'<text transform="translate(20,{MARGIN["top"] + ph / 2:.1f}) rotate(-90)" text-anchor="middle">'
        "pointer displacement (&#181;m)</text>"
    )
    out.append(
        f'<rect class="weak-regime" x="{sx(-bound_x):.2f}" y="{sy(box_y):.2f}" '
        f'width="{sx(bound_x) - sx(-bound_x):.2f}" height="{sy(-box_y) - sy(box_y):.2f}" '
        'fill="none" stroke="gray" stroke-width="1.5"/>'
    )
    for i, n in weak_values.items():
        n = float(n)
        out.append(
            f'<line class="ideal-line" x1="{sx(xlo):.2f}" y1="{sy(-gain * xlo * n):.2f}" '
            f'x2="{sx(xhi):.2f}" y2="{sy(-gain * xhi * n):.2f}" stroke="{COLORS[i]}" '
            'stroke-dasharray="6,4" stroke-width="1.5"/>'
        )
    for i, (xp, d) in series.items():
        for a, b in zip(xp, d):
            if math.isfinite(b):
                out.append(_marker(i, sx(a), sy(b), COLORS[i]))
    lx = MARGIN["left"] + pw + 15
    for k, i in enumerate(sorted(series)):
        y = MARGIN["top"] + 20 + 40 * k
        out.append(_marker(i, lx + 10, y, COLORS[i]))
        out.append(f'<text x="{lx + 25}" y="{y + 4}">&#947;N class {i}</text>')
        out.append(
            f'<line class="legend-line" x1="{lx}" y1="{y + 18}" x2="{lx + 20}" y2="{y + 18}" '
            f'stroke="{COLORS[i]}" stroke-width="1.5"/>'
        )
        out.append(f'<text x="{lx + 25}" y="{y + 22}">&#961; class {i}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
