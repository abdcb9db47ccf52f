"""Downstream uses of detected symmetries: symmetrization and compression."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import GeometryError, NeighborIndex, PointCloud, reflect_point
from .hough import HoughPlane
from .metrics import CompressedCloud, _removal_set, compress


@dataclass(frozen=True)
class SymmetrizeConfig:
    blend: float = 1.0     # weight of the symmetric average; 0 is the identity
    iterations: int = 3
    support_eps: float = 0.05

    def __post_init__(self):
        if not (0.0 <= self.blend <= 1.0):
            raise GeometryError("blend must be in [0, 1]")
        if self.iterations < 0 or self.support_eps <= 0:
            raise GeometryError("bad symmetrize config")


def asymmetry_residual(points: np.ndarray, plane: HoughPlane) -> float:
    """Max over points of the distance from the mirror image to the cloud."""
    dist, _ = NeighborIndex(points).nearest(reflect_point(points, plane))
    return float(dist.max())


def symmetrize(cloud: PointCloud, plane: HoughPlane, cfg: SymmetrizeConfig) -> PointCloud:
    """Pull mirror-correspondent pairs toward their symmetric average.

    Each supported point p (one whose mirror lands within support_eps of some
    cloud point q) moves to (1-blend) * p + blend * (p + reflect(q)) / 2.
    Unsupported points stay put. A shape already symmetric about the plane is
    a fixed point.
    """
    pts = cloud.points.copy()
    if cfg.blend == 0.0:
        return PointCloud(pts, normals=cloud.normals,
                          gt_symmetries=cloud.gt_symmetries,
                          gt_translation=cloud.gt_translation)
    for _ in range(cfg.iterations):
        mirrored = reflect_point(pts, plane)
        dist, idx = NeighborIndex(pts).nearest(mirrored)
        sup = dist < cfg.support_eps
        if not sup.any():
            break
        q_back = reflect_point(pts[idx[sup]], plane)
        target = 0.5 * (pts[sup] + q_back)
        pts[sup] = (1.0 - cfg.blend) * pts[sup] + cfg.blend * target
    return PointCloud(pts)


def sequential_compress(cloud: PointCloud, results, support_eps: float = 0.02):
    """Greedy compression with detected symmetries, keeping per-stage snapshots.

    Returns (CompressedCloud, ratio, stages) where stages[i] is the point
    array after applying i symmetries (stages[0] is the input).
    """
    stages = [cloud.points]
    comp, ratio = compress(cloud, results, support_eps)
    # replay the chosen planes one at a time to record intermediate stages
    pts = cloud.points
    for plane in comp.planes:
        rm = _removal_set(pts, plane, support_eps)
        keep = np.setdiff1d(np.arange(pts.shape[0]), rm)
        pts = pts[keep]
        stages.append(pts)
    return comp, ratio, stages
