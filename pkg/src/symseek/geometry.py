"""Point cloud container, normalization, noise, nearest neighbors, Chamfer distance."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class PointCloud:
    """A shape as a set of d-dimensional points, d in {2, 3}.

    Coordinates are dimensionless. `normals`, when present, are unit vectors,
    one per point. `gt_symmetries` optionally carries the known symmetry
    planes of synthetic shapes; `gt_translation` the known shift of composite
    shapes built from a translated motif.
    """

    points: np.ndarray
    normals: np.ndarray | None = None
    gt_symmetries: list | None = None
    gt_translation: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] not in (2, 3):
            raise GeometryError(f"points must be (n, 2) or (n, 3), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise GeometryError("points must be finite")
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.normals is not None:
            nrm = np.asarray(self.normals, dtype=float)
            if nrm.shape != pts.shape:
                raise GeometryError("normals must match points in shape")
            lens = np.linalg.norm(nrm, axis=1)
            if np.any(np.abs(lens - 1.0) > 1e-9):
                raise GeometryError("normals must be unit length")
            nrm = nrm.copy()
            nrm.setflags(write=False)
            object.__setattr__(self, "normals", nrm)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]


class NeighborIndex:
    """Exact nearest-neighbor / radius queries over a point cloud.

    Read-only after construction and safe to share between threads.
    """

    def __init__(self, cloud_or_points):
        pts = cloud_or_points.points if isinstance(cloud_or_points, PointCloud) else np.asarray(cloud_or_points, float)
        self._points = pts
        self._tree = cKDTree(pts)

    @property
    def points(self) -> np.ndarray:
        return self._points

    def nearest(self, queries):
        """Distances and indices of the exact nearest neighbor of each query."""
        dist, idx = self._tree.query(np.asarray(queries, float))
        return dist, idx

    def radius(self, query, r):
        """Indices of all points within distance r of `query`."""
        return np.array(sorted(self._tree.query_ball_point(np.asarray(query, float), r)), dtype=int)

    def radius_pairs_graph(self, r):
        """Sparse adjacency of all point pairs closer than r."""
        return self._tree.sparse_distance_matrix(self._tree, r, output_type="coo_matrix")


def normalize(cloud: PointCloud) -> PointCloud:
    """Center the cloud at its centroid and scale so max |coordinate| is 1.

    Uniform scale so symmetries are preserved; aspect ratio is kept.
    """
    if len(cloud) == 0:
        raise GeometryError("empty shape")
    pts = cloud.points - cloud.points.mean(axis=0)
    scale = np.abs(pts).max()
    if scale > 0:
        pts = pts / scale
    return PointCloud(pts, normals=cloud.normals,
                      gt_symmetries=cloud.gt_symmetries,
                      gt_translation=cloud.gt_translation)


def add_noise(cloud: PointCloud, level: float, mode: str = "isotropic",
              seed: int = 0) -> PointCloud:
    """Displace each point by Gaussian noise of scale `level`.

    isotropic: level * g per coordinate, g ~ N(0, 1).
    along_normal: level * g * n_i with scalar g ~ N(0, 1); requires normals.
    """
    if level < 0:
        raise GeometryError("noise level must be >= 0")
    if level == 0:
        return cloud
    rng = np.random.default_rng(seed)
    if mode == "isotropic":
        pts = cloud.points + level * rng.standard_normal(cloud.points.shape)
    elif mode == "along_normal":
        if cloud.normals is None:
            raise GeometryError("along_normal noise requires normals")
        g = rng.standard_normal(len(cloud))
        pts = cloud.points + level * g[:, None] * cloud.normals
    else:
        raise GeometryError(f"unknown noise mode {mode!r}")
    return PointCloud(pts, normals=cloud.normals,
                      gt_symmetries=cloud.gt_symmetries,
                      gt_translation=cloud.gt_translation)


def chamfer(a: PointCloud, b: PointCloud) -> float:
    """Symmetric Chamfer distance: the two mean nearest-neighbor distances, summed."""
    if len(a) == 0 or len(b) == 0:
        raise GeometryError("chamfer requires non-empty clouds")
    if a.dim != b.dim:
        raise GeometryError("dimension mismatch")
    d_ab, _ = NeighborIndex(b).nearest(a.points)
    d_ba, _ = NeighborIndex(a).nearest(b.points)
    return float(d_ab.mean() + d_ba.mean())


def reflect_point(x, plane):
    """Reflect point(s) x across a hyperplane given in Hesse normal form.

    `plane` needs attributes `normal` (unit vector) and `offset`. Works on a
    single d-vector or an (n, d) array.
    """
    x = np.asarray(x, float)
    n = np.asarray(plane.normal, float)
    signed = x @ n - plane.offset
    return x - 2.0 * np.multiply.outer(signed, n)
