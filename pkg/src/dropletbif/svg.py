"""Minimal deterministic SVG figures: point clouds, polylines, slice boundaries, stable lines."""
from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["Style", "render_svg", "nice_ticks"]


@dataclass(frozen=True)
class Style:
    width: int = 640
    height: int = 480
    margin: int = 56
    point_radius: float = 0.5
    point_color: str = "#1f3b73"
    polyline_color: str = "#c0392b"
    boundary_color: str = "#27ae60"
    line_color: str = "#555555"
    stroke_width: float = 0.6
    font_size: int = 11
    title: str = ""


def nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    if not hi > lo:
        return [lo]
    raw = (hi - lo) / max(target - 1, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step - 1e-9) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 12))
        t += step
    return ticks


def _fmt_tick(v: float) -> str:
    s = f"{v:.6g}"
    return "0" if s in ("-0", "0") else s


def render_svg(samples=(), polylines=(), boundaries=(), stable_lines=(), style: Style = Style(),
               bounds=None) -> str:
    """Return the SVG document as a string; identical inputs give identical bytes."""
    samples = [np.asarray(s, dtype=float).reshape(-1, 2) for s in samples]
    polylines = [np.asarray(p, dtype=float).reshape(-1, 2) for p in polylines]
    boundaries = [np.asarray(b, dtype=float).reshape(-1, 2) for b in boundaries]
    allpts = [a for a in samples + polylines + boundaries if len(a)]
    if bounds is None:
        if allpts:
            stack = np.vstack(allpts)
            x0, y0 = stack.min(axis=0)
            x1, y1 = stack.max(axis=0)
            for x in stable_lines:
                x0, x1 = min(x0, x), max(x1, x)
        elif stable_lines:
            x0, x1, y0, y1 = min(stable_lines) - 1, max(stable_lines) + 1, -1.0, 1.0
        else:
            x0, x1, y0, y1 = 0.0, 1.0, 0.0, 1.0
        if x1 - x0 < 1e-12:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y1 - y0 < 1e-12:
            y0, y1 = y0 - 0.5, y1 + 0.5
        px, py = 0.04 * (x1 - x0), 0.04 * (y1 - y0)
        x0, x1, y0, y1 = x0 - px, x1 + px, y0 - py, y1 + py
    else:
        x0, x1, y0, y1 = bounds

    W, H, M = style.width, style.height, style.margin
    sx = (W - 2 * M) / (x1 - x0)
    sy = (H - 2 * M) / (y1 - y0)
    X = lambda x: M + (x - x0) * sx
    Y = lambda y: H - M - (y - y0) * sy

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="#ffffff"/>',
        f'<defs><clipPath id="plot"><rect x="{M}" y="{M}" width="{W - 2 * M}" height="{H - 2 * M}"/></clipPath></defs>',
    ]
    if style.title:
        out.append(f'<text x="{W / 2:.2f}" y="{M / 2:.2f}" text-anchor="middle" '
                   f'font-size="{style.font_size + 2}">{escape(style.title)}</text>')
    # axes
    out.append(f'<g class="axes" stroke="#000000" stroke-width="1" fill="none">'
               f'<rect x="{M}" y="{M}" width="{W - 2 * M}" height="{H - 2 * M}"/></g>')
    out.append(f'<g class="ticks" font-size="{style.font_size}" fill="#000000">')
    for t in nice_ticks(x0, x1):
        xp = X(t)
        out.append(f'<line x1="{xp:.2f}" y1="{H - M}" x2="{xp:.2f}" y2="{H - M + 5}" stroke="#000000"/>')
        out.append(f'<text x="{xp:.2f}" y="{H - M + 18}" text-anchor="middle">{_fmt_tick(t)}</text>')
    for t in nice_ticks(y0, y1):
        yp = Y(t)
        out.append(f'<line x1="{M - 5}" y1="{yp:.2f}" x2="{M}" y2="{yp:.2f}" stroke="#000000"/>')
        out.append(f'<text x="{M - 8}" y="{yp + 4:.2f}" text-anchor="end">{_fmt_tick(t)}</text>')
    out.append("</g>")
    out.append('<g clip-path="url(#plot)">')
    for x in stable_lines:
        out.append(f'<line class="stable-line" x1="{X(x):.2f}" y1="{M}" x2="{X(x):.2f}" y2="{H - M}" '
                   f'stroke="{style.line_color}" stroke-dasharray="4 3" stroke-width="1"/>')
    for kind, group, color in (("boundary", boundaries, style.boundary_color),
                               ("polyline", polylines, style.polyline_color)):
        for arr in group:
            if len(arr) < 2:
                continue
            coords = " ".join(f"{X(x):.2f},{Y(y):.2f}" for x, y in arr)
            out.append(f'<polyline class="{kind}" points="{coords}" fill="none" stroke="{color}" '
                       f'stroke-width="{style.stroke_width}"/>')
    for arr in samples:
        out.append(f'<g class="sample" fill="{style.point_color}">')
        r = style.point_radius
        out.extend(f'<circle cx="{X(x):.2f}" cy="{Y(y):.2f}" r="{r}"/>' for x, y in arr)
        out.append("</g>")
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
