"""Synthetic shapes with analytically known symmetries."""

from __future__ import annotations

import numpy as np

from .geometry import GeometryError, PointCloud
from .hough import HoughPlane


def _sample_polyline(segments, n: int):
    """Uniform arc-length samples on a list of (start, end) segments.

    Returns (points, outward-ish normals). Normals are the left-hand
    perpendicular of each segment direction; pass segments oriented so that
    is outward for closed shapes.
    """
    segs = [(np.asarray(a, float), np.asarray(b, float)) for a, b in segments]
    lengths = np.array([np.linalg.norm(b - a) for a, b in segs])
    total = lengths.sum()
    if total <= 0:
        raise GeometryError("degenerate outline")
    cum = np.concatenate([[0.0], np.cumsum(lengths)])
    s = (np.arange(n) + 0.5) / n * total
    idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(segs) - 1)
    pts = np.empty((n, 2))
    nrm = np.empty((n, 2))
    for i, (j, si) in enumerate(zip(idx, s)):
        a, b = segs[j]
        t = (si - cum[j]) / lengths[j]
        pts[i] = a + t * (b - a)
        d = (b - a) / lengths[j]
        nrm[i] = (d[1], -d[0])
    return pts, nrm


def _closed_polygon_segments(vertices):
    v = np.asarray(vertices, float)
    return [(v[i], v[(i + 1) % len(v)]) for i in range(len(v))]


def _axes_through_origin(angles):
    """Mirror planes through the origin whose axis lines sit at the given angles."""
    planes = []
    for th in angles:
        planes.append(HoughPlane(np.array([-np.sin(th), np.cos(th)]), 0.0))
    return planes


def gen_square(num_points: int = 400) -> PointCloud:
    """Boundary of the square [-1, 1]^2; four mirror axes."""
    verts = [(1, 1), (-1, 1), (-1, -1), (1, -1)]
    pts, nrm = _sample_polyline(_closed_polygon_segments(verts), num_points)
    gt = _axes_through_origin([0.0, np.pi / 4, np.pi / 2, 3 * np.pi / 4])
    return PointCloud(pts, normals=nrm, gt_symmetries=gt)


def gen_regular_ngon(num_points: int = 400, sides: int = 5) -> PointCloud:
    """Boundary of a regular polygon inscribed in the unit circle; `sides` mirror axes."""
    if sides < 3:
        raise GeometryError("a polygon needs at least 3 sides")
    base = np.pi / 2
    verts = [(np.cos(base + 2 * np.pi * i / sides), np.sin(base + 2 * np.pi * i / sides))
             for i in range(sides)]
    # counterclockwise outline so the segment perpendicular points outward
    pts, nrm = _sample_polyline(_closed_polygon_segments(verts), num_points)
    angles = [base + np.pi * i / sides for i in range(sides)]
    return PointCloud(pts, normals=nrm, gt_symmetries=_axes_through_origin(angles))


def gen_letter_like(num_points: int = 400) -> PointCloud:
    """Rectangle outline plus a top-only serif: its mirror axes hold only partially."""
    rect = [(0.6, 1.0), (-0.6, 1.0), (-0.6, -1.0), (0.6, -1.0)]
    segments = _closed_polygon_segments(rect)
    segments.append((np.array([0.6, 1.0]), np.array([0.95, 1.0])))
    pts, nrm = _sample_polyline(segments, num_points)
    gt = [HoughPlane(np.array([0.0, 1.0]), 0.0),
          HoughPlane(np.array([1.0, 0.0]), 0.0)]
    return PointCloud(pts, normals=nrm, gt_symmetries=gt)


def gen_cube(num_points: int = 2400) -> PointCloud:
    """Surface grid of the cube [-1, 1]^3; axis-aligned and diagonal mirror planes."""
    per_face = max(1, num_points // 6)
    m = max(1, int(round(np.sqrt(per_face))))
    u = (np.arange(m) + 0.5) / m * 2.0 - 1.0
    uu, vv = np.meshgrid(u, u)
    uu, vv = uu.ravel(), vv.ravel()
    pts, nrm = [], []
    for axis in range(3):
        for sign in (-1.0, 1.0):
            face = np.empty((uu.size, 3))
            face[:, axis] = sign
            other = [a for a in range(3) if a != axis]
            face[:, other[0]] = uu
            face[:, other[1]] = vv
            pts.append(face)
            n = np.zeros((uu.size, 3))
            n[:, axis] = sign
            nrm.append(n)
    pts = np.vstack(pts)
    nrm = np.vstack(nrm)
    r2 = 1.0 / np.sqrt(2.0)
    gt = [HoughPlane(np.eye(3)[i], 0.0) for i in range(3)]
    for i in range(3):
        for j in range(i + 1, 3):
            for s in (1.0, -1.0):
                n = np.zeros(3)
                n[i], n[j] = r2, s * r2
                gt.append(HoughPlane(n, 0.0))
    return PointCloud(pts, normals=nrm, gt_symmetries=gt)


def gen_cylinder(num_points: int = 2400, seed: int = 0) -> PointCloud:
    """Cylinder surface (radius 1, height 2, axis z); the z = 0 mirror plane."""
    rng = np.random.default_rng(seed)
    lateral_area = 2 * np.pi * 2.0
    cap_area = np.pi
    total = lateral_area + 2 * cap_area
    n_lat = int(round(num_points * lateral_area / total))
    n_cap = (num_points - n_lat) // 2
    th = rng.uniform(0, 2 * np.pi, n_lat)
    z = rng.uniform(-1, 1, n_lat)
    lat = np.column_stack([np.cos(th), np.sin(th), z])
    lat_n = np.column_stack([np.cos(th), np.sin(th), np.zeros(n_lat)])
    caps, caps_n = [], []
    for sign in (1.0, -1.0):
        r = np.sqrt(rng.uniform(0, 1, n_cap))
        a = rng.uniform(0, 2 * np.pi, n_cap)
        caps.append(np.column_stack([r * np.cos(a), r * np.sin(a), np.full(n_cap, sign)]))
        n = np.zeros((n_cap, 3))
        n[:, 2] = sign
        caps_n.append(n)
    pts = np.vstack([lat] + caps)
    nrm = np.vstack([lat_n] + caps_n)
    gt = [HoughPlane(np.array([0.0, 0.0, 1.0]), 0.0)]
    return PointCloud(pts, normals=nrm, gt_symmetries=gt)


def gen_composite(num_points: int = 400, shift=(1.0, 0.0)) -> PointCloud:
    """Small square motif plus a translated copy; the shift is the ground truth."""
    shift = np.asarray(shift, float)
    half = num_points // 2
    s = 0.25
    verts = [(s, s), (-s, s), (-s, -s), (s, -s)]
    motif, nrm = _sample_polyline(_closed_polygon_segments(verts), half)
    a = motif - shift / 2
    b = motif + shift / 2
    pts = np.vstack([a, b])
    nrms = np.vstack([nrm, nrm])
    gt = [HoughPlane(shift / np.linalg.norm(shift), 0.0)]  # the bisector mirror
    return PointCloud(pts, normals=nrms, gt_symmetries=gt, gt_translation=shift)


_GENERATORS = {
    "square": gen_square,
    "regular_ngon": gen_regular_ngon,
    "letter_like": gen_letter_like,
    "cube": gen_cube,
    "cylinder": gen_cylinder,
    "composite": gen_composite,
}


def gen_shape(kind: str, num_points: int | None = None, **params) -> PointCloud:
    """Build a named synthetic shape with its analytic ground truth attached."""
    if kind not in _GENERATORS:
        raise GeometryError(f"unknown shape kind {kind!r}")
    if num_points is not None:
        params["num_points"] = num_points
    return _GENERATORS[kind](**params)
