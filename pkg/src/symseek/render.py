"""Minimal SVG rendering of shapes, symmetry lines, vote spaces and trajectories."""

from __future__ import annotations

import numpy as np

from .geometry import PointCloud
from .hough import HoughPlane

_SIZE = 640
_PAD = 40


class SvgCanvas:
    """Tiny SVG 1.1 builder mapping a [lo, hi]^2 world box onto the page."""

    def __init__(self, lo: float, hi: float, size: int = _SIZE):
        self.size = size
        self.lo = lo
        self.hi = hi
        self.parts = []

    def _map(self, p):
        s = (self.size - 2 * _PAD) / (self.hi - self.lo)
        x = _PAD + (p[0] - self.lo) * s
        y = self.size - _PAD - (p[1] - self.lo) * s  # flip y, math convention
        return x, y

    def circle_marker(self, p, r=2.0, color="#1f4e79"):
        x, y = self._map(p)
        self.parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{r}" fill="{color}"/>')

    def line(self, a, b, color="#c0392b", width=1.5, dash=None):
        x1, y1 = self._map(a)
        x2, y2 = self._map(b)
        d = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
                          f'stroke="{color}" stroke-width="{width}"{d}/>')

    def polyline(self, pts, color="#7f8c8d", width=1.0):
        coords = " ".join("{:.2f},{:.2f}".format(*self._map(p)) for p in pts)
        self.parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" '
                          f'stroke-width="{width}"/>')

    def world_circle(self, center, radius, color="#888", width=1.0):
        x, y = self._map(center)
        s = (self.size - 2 * _PAD) / (self.hi - self.lo)
        self.parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{radius * s:.2f}" '
                          f'fill="none" stroke="{color}" stroke-width="{width}" '
                          f'stroke-dasharray="4 3"/>')

    def text(self, p, s, size=12, color="#333"):
        x, y = self._map(p)
        self.parts.append(f'<text x="{x:.2f}" y="{y:.2f}" font-size="{size}" '
                          f'fill="{color}">{s}</text>')

    def to_svg(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
                f'width="{self.size}" height="{self.size}" '
                f'viewBox="0 0 {self.size} {self.size}">'
                f'<rect width="100%" height="100%" fill="white"/>')
        return head + "".join(self.parts) + "</svg>"


def _plane_endpoints(plane, lo, hi):
    """Clip the line x.n = l to the world box, returned as two endpoints."""
    n = plane.normal
    l = plane.offset
    d = np.array([-n[1], n[0]])
    p0 = n * l
    span = 2.0 * (hi - lo)
    return p0 - span * d, p0 + span * d


def render_shape_2d(cloud: PointCloud, planes=(), lo=-1.3, hi=1.3) -> str:
    """Scatter of a 2D shape with its symmetry lines overlaid."""
    canvas = SvgCanvas(lo, hi)
    for plane in planes:
        a, b = _plane_endpoints(plane, lo, hi)
        canvas.line(a, b)
    for p in cloud.points:
        canvas.circle_marker(p)
    return canvas.to_svg()


def render_transform_space(samples: np.ndarray, k: float, finals=None) -> str:
    """Vote scatter with the invalid-ball circle, plus walker modes if given."""
    samples = np.asarray(samples, float)
    ext = max(1.0, np.abs(samples).max()) * 1.1
    canvas = SvgCanvas(-ext, ext)
    if k > 0:
        canvas.world_circle((0.0, 0.0), k)
    for p in samples[:, :2]:
        canvas.circle_marker(p, r=1.2, color="#5b7fa6")
    if finals is not None:
        for p in np.asarray(finals, float)[:, :2]:
            canvas.circle_marker(p, r=3.0, color="#c0392b")
    return canvas.to_svg()


def render_trajectories(positions, k: float) -> str:
    """Per-walker polylines through recorded trajectory snapshots."""
    if not positions:
        return SvgCanvas(-1.0, 1.0).to_svg()
    snaps = [pos for _, pos in positions]
    stacked = np.stack(snaps)  # (T, M, d)
    ext = max(1.0, np.abs(stacked).max()) * 1.1
    canvas = SvgCanvas(-ext, ext)
    if k > 0:
        canvas.world_circle((0.0, 0.0), k)
    for w in range(stacked.shape[1]):
        canvas.polyline(stacked[:, w, :2])
        canvas.circle_marker(stacked[-1, w, :2], r=2.5, color="#c0392b")
    return canvas.to_svg()


def render_shape_3d(cloud: PointCloud, planes=()) -> str:
    """Three axis-aligned orthographic projections side by side."""
    pts = cloud.points
    ext = max(1.0, np.abs(pts).max()) * 1.15
    views = [("xy", 0, 1), ("xz", 0, 2), ("yz", 1, 2)]
    panels = []
    for name, i, j in views:
        canvas = SvgCanvas(-ext, ext, size=_SIZE // 2)
        for plane in planes:
            n2 = np.array([plane.normal[i], plane.normal[j]])
            ln = np.linalg.norm(n2)
            if ln > 1e-9:
                a, b = _plane_endpoints(HoughPlane(n2 / ln, abs(plane.offset) / ln), -ext, ext)
                canvas.line(a, b)
        for p in pts:
            canvas.circle_marker((p[i], p[j]), r=1.2)
        canvas.text((-ext * 0.95, ext * 0.9), name)
        panels.append(canvas)
    half = _SIZE // 2
    body = "".join(
        f'<g transform="translate({idx * half},0)">' + "".join(c.parts) + "</g>"
        for idx, c in enumerate(panels))
    return (f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
            f'width="{3 * half}" height="{half}" viewBox="0 0 {3 * half} {half}">'
            f'<rect width="100%" height="100%" fill="white"/>' + body + "</svg>")
