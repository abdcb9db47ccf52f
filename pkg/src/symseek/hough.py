"""Candidate transformations and their embedding into bounded vote spaces."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .geometry import GeometryError, PointCloud, reflect_point


@dataclass(frozen=True)
class HoughPlane:
    """Reflective hyperplane in Hesse normal form: {x | x.n = l}, l >= 0.

    The normal is oriented away from the origin. For l = 0, where n and -n
    denote the same plane, the first nonzero coordinate of n is made positive.
    """

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        ln = np.linalg.norm(n)
        if abs(ln - 1.0) > 1e-9:
            raise GeometryError("plane normal must be unit length")
        l = float(self.offset)
        if l < 0:
            n, l = -n, -l
        if l < 1e-12:
            nz = np.nonzero(np.abs(n) > 1e-12)[0]
            if nz.size and n[nz[0]] < 0:
                n = -n
            l = 0.0
        n = n.copy()
        n.setflags(write=False)
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", l)

    @property
    def dim(self) -> int:
        return self.normal.shape[0]


@dataclass(frozen=True)
class TransformSample:
    """A point of the embedded transformation space, outside the invalid ball."""

    embed: np.ndarray
    k: float

    def __post_init__(self):
        x = np.asarray(self.embed, dtype=float)
        if np.linalg.norm(x) < self.k - 1e-9:
            raise GeometryError("sample inside invalid region")
        x = x.copy()
        x.setflags(write=False)
        object.__setattr__(self, "embed", x)


@dataclass(frozen=True)
class TransformSpace:
    """The vote cloud {T_i} together with its invalid-ball radius and kind."""

    samples: np.ndarray  # (n, d)
    k: float
    dim: int
    kind: str  # reflective | translational | rotational2d

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 2 or s.shape[0] == 0:
            raise GeometryError("transform space must hold at least one sample")
        s = s.copy()
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    def to_json(self) -> str:
        return json.dumps({"kind": self.kind, "k": self.k, "dim": self.dim,
                           "samples": self.samples.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "TransformSpace":
        obj = json.loads(text)
        return cls(np.asarray(obj["samples"], float), float(obj["k"]),
                   int(obj["dim"]), obj["kind"])


def pair_to_plane(p, q) -> HoughPlane:
    """Perpendicular-bisector plane of the pair (p, q): the reflection swapping them."""
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    diff = p - q
    norm = np.linalg.norm(diff)
    if norm < 1e-12:
        raise GeometryError("degenerate pair")
    n = diff / norm
    l = 0.5 * (p + q) @ n
    return HoughPlane(n, l)


def embed_plane(plane: HoughPlane, k: float) -> TransformSample:
    """Embed a plane as the d-vector n * (k + l); the ball of radius k is invalid."""
    if k <= 0:
        raise GeometryError("invalid-ball radius must be > 0")
    # sign(0) := +1; with canonical l >= 0 this is n * (k + l)
    return TransformSample(plane.normal * (k + plane.offset), k)


def decode_sample(sample: TransformSample) -> HoughPlane:
    """Inverse of embed_plane: n = x/|x|, l = |x| - k."""
    x = sample.embed
    r = np.linalg.norm(x)
    if r < sample.k - 1e-6:
        raise GeometryError("inside invalid region")
    return HoughPlane(x / r, max(r - sample.k, 0.0))


def _sample_pairs(points: np.ndarray, num_pairs: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Uniform-with-replacement point pairs; degenerate pairs are re-drawn."""
    n = points.shape[0]
    i = rng.integers(0, n, size=num_pairs)
    j = rng.integers(0, n, size=num_pairs)
    for _ in range(64):
        bad = np.linalg.norm(points[i] - points[j], axis=1) < 1e-12
        if not bad.any():
            break
        j[bad] = rng.integers(0, n, size=int(bad.sum()))
    else:
        raise GeometryError("could not draw non-degenerate pairs")
    return points[i], points[j]


def build_reflective_space(cloud: PointCloud, num_pairs: int = 50_000,
                           k: float = 0.3, seed: int = 0) -> TransformSpace:
    """Collect reflective-symmetry votes from sampled point pairs."""
    if len(cloud) < 2:
        raise GeometryError("need at least 2 points to sample pairs")
    rng = np.random.default_rng(seed)
    p, q = _sample_pairs(cloud.points, num_pairs, rng)
    diff = p - q
    norms = np.linalg.norm(diff, axis=1)
    n = diff / norms[:, None]
    l = np.einsum("ij,ij->i", 0.5 * (p + q), n)
    flip = l < 0
    n[flip] *= -1
    l = np.abs(l)
    return TransformSpace(n * (k + l)[:, None], k, cloud.dim, "reflective")


def build_translation_space(cloud: PointCloud, num_pairs: int = 50_000,
                            seed: int = 0) -> TransformSpace:
    """Collect displacement votes v = q - p from sampled ordered point pairs."""
    if len(cloud) < 2:
        raise GeometryError("need at least 2 points to sample pairs")
    rng = np.random.default_rng(seed)
    p, q = _sample_pairs(cloud.points, num_pairs, rng)
    return TransformSpace(q - p, 0.0, cloud.dim, "translational")


@dataclass(frozen=True)
class Rotation:
    """Rigid rotation as an affine map x -> R x + t, with decoded axis data.

    2D: `center` and signed `angle`. 3D: point `center` on the axis, unit
    `axis` direction, `angle` in (0, 2*pi).
    """

    matrix: np.ndarray
    translation: np.ndarray
    center: np.ndarray
    angle: float
    axis: np.ndarray | None = None

    def apply(self, x):
        return np.asarray(x, float) @ self.matrix.T + self.translation


def compose_rotation(p1: HoughPlane, p2: HoughPlane) -> Rotation:
    """Rotation equal to reflecting across p1 then p2 (two-reflection composition)."""
    n1, l1 = p1.normal, p1.offset
    n2, l2 = p2.normal, p2.offset
    if abs(n1 @ n2) > 1.0 - 1e-9:
        raise GeometryError("parallel planes compose to a translation, not a rotation")
    d = n1.shape[0]
    eye = np.eye(d)
    h1 = eye - 2.0 * np.outer(n1, n1)
    h2 = eye - 2.0 * np.outer(n2, n2)
    mat = h2 @ h1
    # translation of the composed affine map: image of the origin
    t0 = reflect_point(reflect_point(np.zeros(d), p1), p2)
    if d == 2:
        angle = float(np.arctan2(mat[1, 0], mat[0, 0]))
        center = np.linalg.solve(eye - mat, t0)
        return Rotation(mat, t0, center, angle)
    axis = np.cross(n1, n2)
    axis = axis / np.linalg.norm(axis)
    cos_half = float(np.clip(n1 @ n2, -1.0, 1.0))
    angle = 2.0 * float(np.arccos(cos_half))
    # minimum-norm point on the axis: x.n1 = l1, x.n2 = l2
    a = np.vstack([n1, n2])
    center = np.linalg.lstsq(a, np.array([l1, l2]), rcond=None)[0]
    return Rotation(mat, t0, center, angle, axis=axis)
