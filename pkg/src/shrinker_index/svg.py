"""Minimal SVG output for profile curves in the (x, r) half-plane."""
from __future__ import annotations

import math

import numpy as np


def _path(px, py):
    pts = " ".join(f"{a:.3f},{b:.3f}" for a, b in zip(px, py))
    return f"M {pts}" if pts else ""


def _thin(x, max_points=2000):
    step = max(len(x) // max_points, 1)
    idx = np.arange(0, len(x), step)
    if idx[-1] != len(x) - 1:
        idx = np.append(idx, len(x) - 1)
    return idx


def profile_svg(curve, radii=(), overlay=None, overlay_label="", width=640, margin=30):
    """SVG text showing the profile, the axis, circles ``|p| = R`` and an optional overlay.

    ``overlay`` is a per-sample or per-cell function drawn as the profile
    pushed along its normal by a scaled copy of the function.
    """
    x, r = np.asarray(curve.x), np.asarray(curve.r)
    ext = max(float(np.max(np.abs(x))), float(np.max(r)), *(float(R) for R in radii), 1.0) * 1.08
    scale = (width - 2 * margin) / (2 * ext)
    height = int(ext * scale + 2 * margin)

    def to_px(px, py):
        return margin + (np.asarray(px) + ext) * scale, height - margin - np.asarray(py) * scale

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    ax0, ay = to_px([-ext, ext], [0.0, 0.0])
    parts.append(f'<line x1="{ax0[0]:.3f}" y1="{ay[0]:.3f}" x2="{ax0[1]:.3f}" y2="{ay[1]:.3f}" '
                 'stroke="black" stroke-width="1"/>')
    for R in radii:
        t = np.linspace(0.0, math.pi, 181)
        cx, cy = to_px(R * np.cos(t), R * np.sin(t))
        parts.append(f'<path d="{_path(cx, cy)}" fill="none" stroke="#999" stroke-dasharray="4 3"/>')
        parts.append(f'<text x="{cx[0] - 4:.1f}" y="{cy[0] + 14:.1f}" font-size="10">R={R:g}</text>')
    idx = _thin(x)
    px, py = to_px(x[idx], r[idx])
    parts.append(f'<path d="{_path(px, py)}" fill="none" stroke="#1f4e9a" stroke-width="2"/>')
    if overlay is not None:
        u = np.asarray(overlay, dtype=float)
        if len(u) == len(x):
            bx, by, phi = x, r, np.asarray(curve.phi)
        else:
            from .geometry import cell_geometry

            cg = cell_geometry(curve)
            bx, by, phi = cg["x"], cg["r"], cg["phi"]
        amp = 0.15 * ext / max(float(np.max(np.abs(u))), 1e-300)
        ox, oy = bx - amp * u * np.sin(phi), by + amp * u * np.cos(phi)
        j = _thin(ox)
        qx, qy = to_px(ox[j], oy[j])
        parts.append(f'<path d="{_path(qx, qy)}" fill="none" stroke="#c0392b" stroke-width="1.5"/>')
        if overlay_label:
            parts.append(f'<text x="{margin}" y="{margin - 10}" font-size="12" fill="#c0392b">'
                         f'{overlay_label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
