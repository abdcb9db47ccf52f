"""Scoring detected symmetries: F1 matching, association, compression, GT proposal."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .extraction import (DbscanConfig, centroids, cluster_indices, compute_support,
                         dbscan, translation_support)
from .geodesic import GeodesicSpace, geodesic
from .geometry import GeometryError, NeighborIndex, PointCloud, reflect_point
from .hough import HoughPlane, TransformSample, decode_sample, embed_plane


@dataclass(frozen=True)
class GroundTruth:
    """Reference symmetry planes of a shape, with their provenance."""

    symmetries: list
    source: str = "analytic"  # annotated | analytic | proposed

    def __post_init__(self):
        if self.source not in ("annotated", "analytic", "proposed"):
            raise GeometryError(f"unknown ground-truth source {self.source!r}")

    def to_json(self) -> str:
        return json.dumps({
            "symmetries": [{"normal": list(p.normal), "offset": p.offset}
                           for p in self.symmetries],
            "source": self.source,
        })

    @classmethod
    def from_json(cls, text: str) -> "GroundTruth":
        obj = json.loads(text)
        planes = [HoughPlane(np.asarray(s["normal"], float), float(s["offset"]))
                  for s in obj["symmetries"]]
        return cls(planes, obj.get("source", "analytic"))


@dataclass
class EvalReport:
    precision: float
    recall: float
    f1: float
    association: float = 0.0
    compression_ratio: float = 1.0
    matches: list = field(default_factory=list)  # (pred index, gt index, distance)

    def to_json(self) -> str:
        return json.dumps({
            "precision": self.precision, "recall": self.recall, "f1": self.f1,
            "association": self.association,
            "compression_ratio": self.compression_ratio,
            "matches": [[int(i), int(j), float(d)] for i, j, d in self.matches],
        })


def _as_plane(obj) -> HoughPlane:
    if isinstance(obj, HoughPlane):
        return obj
    if getattr(obj, "plane", None) is not None:
        return obj.plane
    raise GeometryError("expected a plane or a reflective symmetry result")


def match_f1(pred, gt: GroundTruth, delta: float, geo: GeodesicSpace):
    """Greedy one-to-one matching within a geodesic delta-radius.

    Candidate (pred, gt) pairs are taken in increasing distance order; each
    side can match at most once. Returns (precision, recall, f1, matches).
    """
    if delta <= 0:
        raise GeometryError("delta must be > 0")
    pred_planes = [_as_plane(p) for p in pred]
    gt_planes = list(gt.symmetries)
    if not pred_planes or not gt_planes:
        p = r = f = 0.0
        return p, r, f, []
    pe = [embed_plane(q, geo.k).embed for q in pred_planes]
    ge = [embed_plane(q, geo.k).embed for q in gt_planes]
    cand = []
    for i, x in enumerate(pe):
        for j, y in enumerate(ge):
            d = geodesic(x, y, geo)
            if d <= delta:
                cand.append((d, i, j))
    cand.sort()
    used_p, used_g, matches = set(), set(), []
    for d, i, j in cand:
        if i in used_p or j in used_g:
            continue
        used_p.add(i)
        used_g.add(j)
        matches.append((i, j, d))
    m = len(matches)
    precision = m / len(pred_planes)
    recall = m / len(gt_planes)
    f1 = 2 * precision * recall / (precision + recall) if m else 0.0
    return precision, recall, f1, matches


def association(pred, cloud: PointCloud, support_eps: float) -> float:
    """Mean proportion of shape points associated with each detected symmetry."""
    if not pred:
        return 0.0
    props = []
    for item in pred:
        kind = getattr(item, "kind", "reflective")
        if kind == "translational":
            info = translation_support(item.translation, cloud, support_eps)
        else:
            info = compute_support(_as_plane(item), cloud, support_eps)
        props.append(info.raw_significance)
    return float(np.mean(props))


@dataclass
class CompressedCloud:
    """Remaining points plus the ordered planes that reconstruct the rest."""

    points: np.ndarray
    planes: list           # applied in this order during compression
    support_eps: float
    original_size: int

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def ratio(self) -> float:
        d = self.dim
        original = self.original_size * d * 8
        compressed = self.points.shape[0] * d * 8 + len(self.planes) * (d + 2) * 8
        return compressed / original

    def to_json(self) -> str:
        return json.dumps({
            "points": self.points.tolist(),
            "planes": [{"normal": list(p.normal), "offset": p.offset} for p in self.planes],
            "support_eps": self.support_eps,
            "original_size": self.original_size,
        })

    @classmethod
    def from_json(cls, text: str) -> "CompressedCloud":
        obj = json.loads(text)
        planes = [HoughPlane(np.asarray(s["normal"], float), float(s["offset"]))
                  for s in obj["planes"]]
        return cls(np.asarray(obj["points"], float), planes,
                   float(obj["support_eps"]), int(obj["original_size"]))


def _removal_set(points: np.ndarray, plane: HoughPlane, eps: float) -> np.ndarray:
    """Indices droppable under `plane`: negative-side mirrors of positive-side points."""
    signed = points @ plane.normal - plane.offset
    pos = np.nonzero(signed > 0)[0]
    if pos.size == 0:
        return np.empty(0, int)
    tree = NeighborIndex(points)
    dist, idx = tree.nearest(reflect_point(points[pos], plane))
    hits = idx[(dist < eps)]
    # only points strictly on the negative side may be dropped, so the
    # surviving half plus the plane can regenerate them
    hits = np.unique(hits)
    return hits[signed[hits] < 0]


def compress(cloud: PointCloud, pred, support_eps: float):
    """Greedily drop mirror halves under the best remaining symmetry.

    Each round removes the redundant side of the plane with the largest
    removal set; stops when storing another plane record costs more than it
    saves. Returns (CompressedCloud, ratio).
    """
    planes = [_as_plane(p) for p in pred]
    pts = np.asarray(cloud.points, float)
    d = pts.shape[1]
    used = []
    min_gain = (d + 2) / d  # one plane record, measured in points
    remaining = list(range(len(planes)))
    while remaining and pts.shape[0] > 1:
        best_i, best_rm = None, None
        for i in remaining:
            rm = _removal_set(pts, planes[i], support_eps)
            if best_rm is None or rm.size > best_rm.size:
                best_i, best_rm = i, rm
        if best_rm is None or best_rm.size <= min_gain:
            break
        keep = np.setdiff1d(np.arange(pts.shape[0]), best_rm)
        pts = pts[keep]
        used.append(planes[best_i])
        remaining.remove(best_i)
    comp = CompressedCloud(pts, used, support_eps, len(cloud))
    return comp, comp.ratio()


def decompress(comp: CompressedCloud) -> PointCloud:
    """Replay the recorded planes in reverse, restoring the dropped mirrors."""
    pts = np.asarray(comp.points, float)
    for plane in reversed(comp.planes):
        signed = pts @ plane.normal - plane.offset
        mirrored = reflect_point(pts[signed > 0], plane)
        if mirrored.shape[0]:
            dist, _ = NeighborIndex(pts).nearest(mirrored)
            new = mirrored[dist >= comp.support_eps]
            if new.shape[0]:
                pts = np.vstack([pts, new])
    return PointCloud(pts)


def propose_ground_truth(cloud: PointCloud, vote_threshold: float = 0.5,
                         cluster_eps: float = 0.05, support_eps: float = 0.02,
                         max_pairs: int = 1_000_000, k: float = 0.3,
                         seed: int = 0) -> GroundTruth:
    """Brute-force candidate planes from point pairs, kept if enough points vote.

    Every pair proposes its perpendicular bisector; a proposal survives when
    the proportion of points whose mirror lands within support_eps exceeds
    vote_threshold. Survivors are clustered (euclidean) and centroids emitted
    for human review.
    """
    pts = cloud.points
    n = pts.shape[0]
    if n < 2:
        raise GeometryError("need at least 2 points")
    iu, ju = np.triu_indices(n, k=1)
    if iu.size > max_pairs:
        rng = np.random.default_rng(seed)
        sel = rng.choice(iu.size, size=max_pairs, replace=False)
        iu, ju = iu[sel], ju[sel]
    diff = pts[iu] - pts[ju]
    norms = np.linalg.norm(diff, axis=1)
    ok = norms > 1e-12
    nrm = diff[ok] / norms[ok, None]
    off = np.einsum("ij,ij->i", 0.5 * (pts[iu[ok]] + pts[ju[ok]]), nrm)

    index = NeighborIndex(pts)
    survivors = []
    for nv, l in zip(nrm, off):
        mirrored = pts - 2.0 * np.outer(pts @ nv - l, nv)
        dist, _ = index.nearest(mirrored)
        if (dist < support_eps).mean() > vote_threshold:
            # canonicalize so near-zero offsets do not split a plane into
            # antipodal embeddings that euclidean clustering cannot merge
            survivors.append(embed_plane(HoughPlane(nv, l), k).embed)
    if not survivors:
        return GroundTruth([], source="proposed")
    emb = np.asarray(survivors)
    labels = dbscan(emb, DbscanConfig(eps=cluster_eps, min_pts=1),
                    metric="geodesic", k=k)
    groups = [emb[idx] for idx in cluster_indices(labels)]
    planes = [decode_sample(TransformSample(c, k)) for c in centroids(groups, k=k)]
    return GroundTruth(planes, source="proposed")
