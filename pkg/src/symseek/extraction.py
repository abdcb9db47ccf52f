"""Turn converged walkers into a final symmetry set."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from .geodesic import GeodesicSpace, ScoreField, geodesic_pairwise, score_many
from .geometry import GeometryError, NeighborIndex, PointCloud, reflect_point
from .hough import HoughPlane, TransformSample, decode_sample, embed_plane
from .langevin import walk


@dataclass(frozen=True)
class DbscanConfig:
    eps: float
    min_pts: int

    def __post_init__(self):
        if self.eps <= 0 or self.min_pts < 1:
            raise GeometryError("eps must be > 0 and min_pts >= 1")


@dataclass(frozen=True)
class ExtractConfig:
    dbscan: DbscanConfig
    support_eps: float = 0.02
    tau: float = 0.1
    connect_radius: float | None = None  # default: 4x mean NN spacing of the cloud
    # Walkers sample the smoothed vote density, so a raw cluster mean sits a
    # little off the density peak; a short noiseless descent at the final
    # noise level snaps it back before decoding.
    refine_steps: int = 60
    refine_coeff: float = 0.24
    kernel_size: float | None = None     # sigma of the refinement field

    def __post_init__(self):
        if self.support_eps <= 0 or not (0 < self.tau <= 1):
            raise GeometryError("bad extraction config")
        if self.refine_steps < 0 or self.refine_coeff <= 0:
            raise GeometryError("bad extraction config")


def default_extract_config(kernel_size: float, num_walkers: int, dim: int) -> ExtractConfig:
    return ExtractConfig(
        dbscan=DbscanConfig(eps=2.0 * kernel_size, min_pts=max(5, num_walkers // 40)),
        support_eps=0.02 if dim == 2 else 0.05,
        refine_coeff=0.24 if dim == 2 else 0.08,
        kernel_size=kernel_size,
    )


@dataclass
class SymmetryResult:
    """A decoded symmetry with its supporting points and significance."""

    kind: str                       # reflective | translational
    plane: HoughPlane | None = None
    translation: np.ndarray | None = None
    support: np.ndarray = field(default_factory=lambda: np.empty(0, int))
    significance: float = 0.0       # |largest connected component| / |S|
    raw_support: np.ndarray = field(default_factory=lambda: np.empty(0, int))
    raw_significance: float = 0.0   # |raw associated set| / |S|
    cluster_size: int = 0

    def to_dict(self) -> dict:
        out = {"kind": self.kind,
               "significance": self.significance,
               "raw_significance": self.raw_significance,
               "cluster_size": self.cluster_size,
               "support": [int(i) for i in self.support]}
        if self.plane is not None:
            out["normal"] = list(self.plane.normal)
            out["offset"] = self.plane.offset
        if self.translation is not None:
            out["translation"] = list(self.translation)
        return out


def dbscan(points, cfg: DbscanConfig, metric: str = "euclidean", k: float = 0.0):
    """Classic density clustering; returns labels with noise marked -1.

    metric "geodesic" clusters under the invalid-ball premetric, so antipodal
    boundary groups merge into one cluster.
    """
    points = np.asarray(points, float)
    if points.shape[0] == 0:
        raise GeometryError("dbscan needs at least one point")
    if metric == "geodesic":
        dmat = geodesic_pairwise(points, points, k)
    else:
        dmat = cdist(points, points)
    neigh = [np.nonzero(row <= cfg.eps)[0] for row in dmat]
    core = np.array([len(nb) >= cfg.min_pts for nb in neigh])

    labels = np.full(points.shape[0], -1, dtype=int)
    cluster = 0
    for i in range(points.shape[0]):
        if labels[i] != -1 or not core[i]:
            continue
        labels[i] = cluster
        queue = deque(neigh[i])
        while queue:
            j = queue.popleft()
            if labels[j] == -1:
                labels[j] = cluster
                if core[j]:
                    queue.extend(neigh[j])
        cluster += 1
    return labels


def cluster_indices(labels) -> list[np.ndarray]:
    return [np.nonzero(labels == c)[0] for c in range(labels.max() + 1)]


def centroids(clusters: list[np.ndarray], k: float = 0.0) -> list[np.ndarray]:
    """Arithmetic cluster means after antipodal canonicalization.

    Members on the opposite side of the ball from the cluster seed are
    negated (same plane at offset ~0) before averaging; the mean is pushed
    back out to norm >= k.
    """
    out = []
    for pts in clusters:
        pts = np.asarray(pts, float)
        if pts.shape[0] == 0:
            continue
        if k > 0:
            seed = pts[0]
            flip = pts @ seed < 0
            pts = np.where(flip[:, None], -pts, pts)
        c = pts.mean(axis=0)
        r = np.linalg.norm(c)
        if k > 0 and r < k:
            c = c * (k / max(r, 1e-12))
        out.append(c)
    return out


def refine_plane(plane: HoughPlane, cloud: PointCloud, support_eps: float,
                 iterations: int = 6) -> HoughPlane:
    """Refit a plane from the mirror correspondences it induces.

    Every supported point p whose reflection lands on a shape point q gives a
    segment the plane must bisect, so the refit normal is the dominant
    direction of the differences p - q and the offset is the mean projection
    of the midpoints. Points sitting on the plane itself (p ~ q) carry no
    direction information and are skipped.
    """
    pts = cloud.points
    index = NeighborIndex(cloud)
    for _ in range(iterations):
        mirrored = reflect_point(pts, plane)
        dist, idx = index.nearest(mirrored)
        keep = dist < support_eps
        if not keep.any():
            return plane
        p = pts[keep]
        q = pts[idx[keep]]
        diff = p - q
        good = np.linalg.norm(diff, axis=1) > support_eps
        if good.sum() < 2:
            return plane
        diff = diff[good]
        _, vecs = np.linalg.eigh(diff.T @ diff)
        n = vecs[:, -1]
        mid = 0.5 * (p[good] + q[good])
        plane = HoughPlane(n, float(np.mean(mid @ n)))
    return plane


@dataclass(frozen=True)
class SupportInfo:
    component: np.ndarray       # indices of the largest connected supported region
    significance: float
    raw: np.ndarray             # all points whose mirror lands near the shape
    raw_significance: float


def compute_support(plane: HoughPlane, cloud: PointCloud, support_eps: float,
                    connect_radius: float | None = None) -> SupportInfo:
    """Points whose reflection lands within support_eps of the shape.

    The reported component is the largest connected piece of that set under a
    radius graph; significance is its share of the whole shape.
    """
    pts = cloud.points
    index = NeighborIndex(cloud)
    mirrored = reflect_point(pts, plane)
    dist, _ = index.nearest(mirrored)
    raw = np.nonzero(dist < support_eps)[0]
    n = len(cloud)
    if raw.size == 0:
        return SupportInfo(raw, 0.0, raw, 0.0)
    if connect_radius is None:
        connect_radius = 4.0 * mean_nn_spacing(cloud)
    sub = pts[raw]
    tree = cKDTree(sub)
    adj = tree.sparse_distance_matrix(tree, connect_radius, output_type="coo_matrix")
    ncomp, comp = connected_components(adj.tocsr(), directed=False)
    sizes = np.bincount(comp, minlength=ncomp)
    best = raw[comp == np.argmax(sizes)]
    return SupportInfo(best, len(best) / n, raw, len(raw) / n)


def mean_nn_spacing(cloud: PointCloud) -> float:
    tree = cKDTree(cloud.points)
    dist, _ = tree.query(cloud.points, k=2)
    return float(dist[:, 1].mean())


def extract(trace, space, cloud: PointCloud, cfg: ExtractConfig) -> list[SymmetryResult]:
    """DBSCAN walker finals, decode centroids, attach support, filter by tau."""
    finals = np.asarray(trace.finals, float)
    metric = "geodesic" if space.kind == "reflective" else "euclidean"
    labels = dbscan(finals, cfg.dbscan, metric=metric, k=space.k)
    groups = cluster_indices(labels)
    field = None
    if cfg.kernel_size and cfg.refine_steps > 0:
        if space.kind == "reflective":
            geo = GeodesicSpace(space.k, space.dim)
        else:
            geo = GeodesicSpace(0.0, space.dim, mode="euclidean")
        field = ScoreField(space, geo, cfg.kernel_size)
    results = []
    for idx in groups:
        cen = centroids([finals[idx]], k=space.k)
        if not cen:
            continue
        if field is not None:
            c = cen[0]
            walk_k = space.k if space.kind == "reflective" else 0.0
            for _ in range(cfg.refine_steps):
                g = score_many(field, c[None])[0]
                c = walk(c, -cfg.refine_coeff * g, walk_k)
            cen[0] = c
        if space.kind == "reflective":
            plane = decode_sample(TransformSample(cen[0], space.k))
            plane = refine_plane(plane, cloud, cfg.support_eps)
            info = compute_support(plane, cloud, cfg.support_eps, cfg.connect_radius)
            res = SymmetryResult("reflective", plane=plane,
                                 support=info.component, significance=info.significance,
                                 raw_support=info.raw, raw_significance=info.raw_significance,
                                 cluster_size=len(idx))
        else:
            v = cen[0]
            info = translation_support(v, cloud, cfg.support_eps, cfg.connect_radius)
            res = SymmetryResult("translational", translation=v,
                                 support=info.component, significance=info.significance,
                                 raw_support=info.raw, raw_significance=info.raw_significance,
                                 cluster_size=len(idx))
        if res.significance > cfg.tau:
            results.append(res)
    results.sort(key=lambda r: -r.significance)
    if space.kind == "reflective":
        results = _dedupe(results, space.k, cfg.dbscan.eps)
    return results


def _dedupe(results: list[SymmetryResult], k: float, eps: float) -> list[SymmetryResult]:
    """Drop results whose plane duplicates a more significant one.

    Refinement can snap two adjacent clusters onto the same density peak.
    """
    kept: list[SymmetryResult] = []
    embs = []
    for res in results:
        e = embed_plane(res.plane, k).embed
        if embs and geodesic_pairwise(e[None], np.array(embs), k).min() <= eps:
            continue
        kept.append(res)
        embs.append(e)
    return kept


def translation_support(v, cloud: PointCloud, support_eps: float,
                        connect_radius: float | None = None) -> SupportInfo:
    """Support of a translational symmetry: points whose shift lands on the shape."""
    pts = cloud.points
    index = NeighborIndex(cloud)
    dist, _ = index.nearest(pts + np.asarray(v, float))
    raw = np.nonzero(dist < support_eps)[0]
    n = len(cloud)
    if raw.size == 0:
        return SupportInfo(raw, 0.0, raw, 0.0)
    if connect_radius is None:
        connect_radius = 4.0 * mean_nn_spacing(cloud)
    sub = pts[raw]
    tree = cKDTree(sub)
    adj = tree.sparse_distance_matrix(tree, connect_radius, output_type="coo_matrix")
    ncomp, comp = connected_components(adj.tocsr(), directed=False)
    sizes = np.bincount(comp, minlength=ncomp)
    best = raw[comp == np.argmax(sizes)]
    return SupportInfo(best, len(best) / n, raw, len(raw) / n)
