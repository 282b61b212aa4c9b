"""Plain SVG figure of a planar attractor decomposition."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

__all__ = ["render_decomposition"]

SIZE = 600
MARGIN = 50
CURVE_COLORS = {"sigma_H": "#1f4e9c", "sigma_0": "#b22222", "sigma_V": "#2e7d32"}
MARKER_FILL = {"attractor": "#000000", "repeller": "#ffffff", "saddle": "#888888",
               "nonhyperbolic": "#ffcc00"}


def _to_px(pts, r):
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    span = SIZE - 2 * MARGIN
    px = MARGIN + pts[:, 0] / r[0] * span
    py = SIZE - MARGIN - pts[:, 1] / r[1] * span
    return np.column_stack([px, py])


def _points_attr(pts, r) -> str:
    return " ".join(f"{x:.3f},{y:.3f}" for x, y in _to_px(pts, r))


def render_decomposition(r, curves: dict, markers: list, nullclines: dict | None = None,
                         title: str = "") -> str:
    """Axes for [0, r], dashed nullclines, solid curves for each piece
    with at least two points, and labelled fixed-point markers."""
    r = np.asarray(r, dtype=float)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" '
        f'viewBox="0 0 {SIZE} {SIZE}">',
        f'<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="#ffffff"/>',
    ]
    if title:
        out.append(f'<text x="{SIZE / 2:.3f}" y="25.000" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="14">{escape(title)}</text>')
    corners = _to_px([[0, 0], [r[0], 0], [r[0], r[1]], [0, r[1]]], r)
    out.append(f'<polygon id="box" points="{" ".join(f"{x:.3f},{y:.3f}" for x, y in corners)}" '
               'fill="none" stroke="#cccccc" stroke-width="1"/>')
    (x0, y0), = _to_px([[0, 0]], r)
    (x1, _), = _to_px([[r[0], 0]], r)
    (_, y1), = _to_px([[0, r[1]]], r)
    out.append(f'<line id="axis-x1" x1="{x0:.3f}" y1="{y0:.3f}" x2="{x1:.3f}" y2="{y0:.3f}" '
               'stroke="#000000" stroke-width="1.5"/>')
    out.append(f'<line id="axis-x2" x1="{x0:.3f}" y1="{y0:.3f}" x2="{x0:.3f}" y2="{y1:.3f}" '
               'stroke="#000000" stroke-width="1.5"/>')
    out.append(f'<text x="{x1:.3f}" y="{y0 + 20:.3f}" text-anchor="end" '
               'font-family="sans-serif" font-size="12">x1</text>')
    out.append(f'<text x="{x0 - 10:.3f}" y="{y1:.3f}" text-anchor="end" '
               'font-family="sans-serif" font-size="12">x2</text>')
    for name, pts in (nullclines or {}).items():
        if len(pts) >= 2:
            out.append(f'<polyline id="{escape(name)}" class="nullcline" fill="none" '
                       f'stroke="#999999" stroke-width="1" stroke-dasharray="5,4" '
                       f'points="{_points_attr(pts, r)}"/>')
    for name, pts in curves.items():
        if len(pts) >= 2:
            color = CURVE_COLORS.get(name, "#000000")
            out.append(f'<polyline id="{escape(name)}" class="curve" fill="none" '
                       f'stroke="{color}" stroke-width="2" points="{_points_attr(pts, r)}"/>')
    for mk in markers:
        (cx, cy), = _to_px([mk["location"]], r)
        fill = MARKER_FILL.get(mk.get("classification", ""), "#000000")
        label = escape(mk["label"])
        out.append(f'<circle id="marker-{label}" class="marker" cx="{cx:.3f}" cy="{cy:.3f}" '
                   f'r="4" fill="{fill}" stroke="#000000" stroke-width="1"/>')
        out.append(f'<text x="{cx + 6:.3f}" y="{cy - 6:.3f}" font-family="sans-serif" '
                   f'font-size="12">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
