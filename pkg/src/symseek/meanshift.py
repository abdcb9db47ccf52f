"""Mean-shift mode seeking over raw vote clouds (the clustering baseline).

Runs in the embedded space with plain Euclidean distances and a truncated
neighborhood, which is exactly what makes it fragile on noisy shapes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .geometry import GeometryError
from .hough import TransformSpace


@dataclass(frozen=True)
class MeanShiftConfig:
    bandwidth: float
    neighborhood_radius: float | None = None  # default 3 * bandwidth
    max_iters: int = 300
    convergence_tol: float = 1e-3
    kernel: str = "gaussian"  # gaussian | epanechnikov
    max_trajectories: int = 2000

    def __post_init__(self):
        if self.bandwidth <= 0 or self.convergence_tol <= 0:
            raise GeometryError("bandwidth and tolerance must be > 0")
        if self.kernel not in ("gaussian", "epanechnikov"):
            raise GeometryError(f"unknown kernel {self.kernel!r}")

    @property
    def radius(self) -> float:
        return self.neighborhood_radius if self.neighborhood_radius is not None else 3.0 * self.bandwidth


def _kernel_weights(r2, h, kind):
    if kind == "gaussian":
        return np.exp(-r2 / h**2)
    return np.maximum(1.0 - r2 / h**2, 0.0)


def mean_shift_step(points, x, h, kind="gaussian"):
    """One full-neighborhood update: kernel-weighted mean of all points."""
    r2 = np.sum((points - x) ** 2, axis=1)
    w = _kernel_weights(r2, h, kind)
    s = w.sum()
    if s <= 0:
        return x
    return (w[:, None] * points).sum(axis=0) / s


def mean_shift(space: TransformSpace, cfg: MeanShiftConfig) -> np.ndarray:
    """Iterate every (subsampled) vote to its mode; returns deduplicated modes."""
    votes = space.samples
    if votes.shape[0] > cfg.max_trajectories:
        stride = int(np.ceil(votes.shape[0] / cfg.max_trajectories))
        seeds = votes[::stride]
    else:
        seeds = votes
    tree = cKDTree(votes)
    r = cfg.radius
    h = cfg.bandwidth

    x = seeds.copy()
    active = np.ones(len(x), dtype=bool)
    for _ in range(cfg.max_iters):
        if not active.any():
            break
        idx_lists = tree.query_ball_point(x[active], r)
        new = x[active].copy()
        for row, neigh in enumerate(idx_lists):
            if not neigh:
                continue
            pts = votes[neigh]
            r2 = np.sum((pts - new[row]) ** 2, axis=1)
            w = _kernel_weights(r2, h, cfg.kernel)
            s = w.sum()
            if s > 0:
                new[row] = (w[:, None] * pts).sum(axis=0) / s
        moved = np.linalg.norm(new - x[active], axis=1) >= cfg.convergence_tol
        x[active] = new
        still = np.zeros(len(x), dtype=bool)
        still[np.nonzero(active)[0][moved]] = True
        active = still

    # greedy dedup of converged trajectories
    modes = []
    for p in x:
        if all(np.linalg.norm(p - q) >= cfg.convergence_tol for q in modes):
            modes.append(p)
    return np.asarray(modes)
