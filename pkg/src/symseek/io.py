"""Reading and writing point clouds (.xyz, .obj, .json)."""

from __future__ import annotations

import json
import os

import numpy as np

from .geometry import GeometryError, PointCloud
from .hough import HoughPlane


class ParseError(GeometryError):
    """Malformed input file; message carries the offending line number."""


def load_cloud(path: str, fmt: str | None = None, dim: int | None = None) -> PointCloud:
    fmt = fmt or os.path.splitext(path)[1].lstrip(".").lower()
    if fmt == "xyz":
        return _load_xyz(path, dim)
    if fmt == "obj":
        return _load_obj(path)
    if fmt == "json":
        return _load_json(path)
    raise GeometryError(f"unknown format {fmt!r}")


def save_cloud(cloud: PointCloud, path: str, fmt: str | None = None) -> None:
    fmt = fmt or os.path.splitext(path)[1].lstrip(".").lower()
    if fmt == "xyz":
        _save_xyz(cloud, path)
    elif fmt == "obj":
        _save_obj(cloud, path)
    elif fmt == "json":
        _save_json(cloud, path)
    else:
        raise GeometryError(f"unknown format {fmt!r}")


def _load_xyz(path: str, dim: int | None) -> PointCloud:
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            parts = body.split()
            try:
                vals = [float(p) for p in parts]
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric value")
            if rows and len(vals) != len(rows[0]):
                raise ParseError(f"{path}:{lineno}: inconsistent column count")
            rows.append(vals)
    if not rows:
        raise ParseError(f"{path}: no points")
    pts = np.asarray(rows, float)
    if dim is not None and pts.shape[1] != dim:
        raise ParseError(f"{path}: expected {dim} columns, found {pts.shape[1]}")
    if pts.shape[1] not in (2, 3):
        raise ParseError(f"{path}: points must have 2 or 3 columns")
    return PointCloud(pts)


def _save_xyz(cloud: PointCloud, path: str) -> None:
    np.savetxt(path, cloud.points, fmt="%.12g")


def _load_obj(path: str) -> PointCloud:
    verts, vnorms, faces = [], [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            body = line.strip()
            if not body or body.startswith("#"):
                continue
            parts = body.split()
            tag = parts[0]
            try:
                if tag == "v":
                    if len(parts) < 4:
                        raise ValueError
                    verts.append([float(p) for p in parts[1:4]])
                elif tag == "vn":
                    if len(parts) < 4:
                        raise ValueError
                    vnorms.append([float(p) for p in parts[1:4]])
                elif tag == "f":
                    idx = [int(p.split("/")[0]) for p in parts[1:]]
                    faces.append([i - 1 if i > 0 else len(verts) + i for i in idx])
            except (ValueError, IndexError):
                raise ParseError(f"{path}:{lineno}: malformed {tag!r} record")
    if not verts:
        raise ParseError(f"{path}: no vertices")
    pts = np.asarray(verts, float)
    if len(vnorms) == len(verts):
        normals = np.asarray(vnorms, float)
        lens = np.linalg.norm(normals, axis=1)
        normals = normals / np.where(lens > 0, lens, 1.0)[:, None]
    elif faces:
        normals = _normals_from_faces(pts, faces)
    else:
        normals = None
    return PointCloud(pts, normals=normals)


def _normals_from_faces(pts: np.ndarray, faces) -> np.ndarray | None:
    """Vertex normals as the area-weighted average of incident face normals."""
    acc = np.zeros_like(pts)
    for face in faces:
        for a, b, c in zip([face[0]] * (len(face) - 2), face[1:-1], face[2:]):
            cross = np.cross(pts[b] - pts[a], pts[c] - pts[a])  # length = 2 * area
            acc[a] += cross
            acc[b] += cross
            acc[c] += cross
    lens = np.linalg.norm(acc, axis=1)
    if np.any(lens <= 0):
        return None
    return acc / lens[:, None]


def _save_obj(cloud: PointCloud, path: str) -> None:
    if cloud.dim != 3:
        raise GeometryError("obj output is 3D only")
    with open(path, "w") as fh:
        for p in cloud.points:
            fh.write(f"v {p[0]:.12g} {p[1]:.12g} {p[2]:.12g}\n")
        if cloud.normals is not None:
            for n in cloud.normals:
                fh.write(f"vn {n[0]:.12g} {n[1]:.12g} {n[2]:.12g}\n")


def _load_json(path: str) -> PointCloud:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}:{exc.lineno}: {exc.msg}")
    try:
        pts = np.asarray(obj["points"], float)
    except (KeyError, ValueError):
        raise ParseError(f"{path}: missing or malformed 'points'")
    normals = obj.get("normals")
    gt = obj.get("gt_symmetries")
    planes = None
    if gt:
        planes = [HoughPlane(np.asarray(s["normal"], float), float(s["offset"])) for s in gt]
    tr = obj.get("gt_translation")
    return PointCloud(pts,
                      normals=np.asarray(normals, float) if normals else None,
                      gt_symmetries=planes,
                      gt_translation=np.asarray(tr, float) if tr else None)


def _save_json(cloud: PointCloud, path: str) -> None:
    obj = {
        "dim": cloud.dim,
        "points": cloud.points.tolist(),
        "normals": cloud.normals.tolist() if cloud.normals is not None else None,
        "gt_symmetries": [{"normal": list(p.normal), "offset": p.offset}
                          for p in cloud.gt_symmetries] if cloud.gt_symmetries else None,
    }
    if cloud.gt_translation is not None:
        obj["gt_translation"] = list(cloud.gt_translation)
    with open(path, "w") as fh:
        json.dump(obj, fh)
