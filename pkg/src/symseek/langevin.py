"""Annealed Langevin dynamics on the transformation space.

Motion that would enter the invalid ball is carried through it: the walker
teleports from the entry point to its antipode (both encode the same plane at
offset zero) and the leftover displacement continues as an arc along the
boundary plus a radial push outward.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geodesic import GeodesicSpace, ScoreField, score_many
from .geometry import GeometryError
from .hough import TransformSpace


@dataclass(frozen=True)
class LangevinConfig:
    kernel_size: float          # final (smallest) noise scale
    step_size: float            # alpha
    sigma_max: float = 0.5      # initial noise scale
    num_levels: int = 10
    steps_per_level: int = 5000
    num_walkers: int = 200
    beta: float = 1.0           # stochasticity multiplier
    seed: int = 0
    k: float = 0.3              # invalid-ball radius the run is meant for
    trace_every: int = 0        # 0 = record final positions only
    votes_per_step: int = 0     # 0 = full neighborhood, else a fresh random
                                # vote subset per step (stochastic estimate)

    def __post_init__(self):
        if not (self.sigma_max >= self.kernel_size > 0):
            raise GeometryError("need sigma_max >= kernel_size > 0")
        if self.step_size <= 0 or self.steps_per_level < 1 or self.num_walkers < 1:
            raise GeometryError("bad langevin config")
        if self.beta < 0 or self.num_levels < 1 or self.votes_per_step < 0:
            raise GeometryError("bad langevin config")

    @property
    def total_steps(self) -> int:
        return self.num_levels * self.steps_per_level


def default_config(dim: int, total_steps: int = 50_000, num_walkers: int = 200,
                   seed: int = 0) -> LangevinConfig:
    """Published hyperparameters: kernel/step/k per dimension, 200 walkers, 50K steps."""
    if dim == 2:
        kernel, step, k = 0.025, 0.06, 0.3
    elif dim == 3:
        kernel, step, k = 0.08, 0.02, 0.5
    else:
        raise GeometryError("dim must be 2 or 3")
    num_levels = 10
    # beta < 1 sharpens the stationary distribution at each level toward the
    # density's peaks, which keeps walkers off weak background ridges and
    # concentrates clusters enough for extraction to separate nearby modes;
    # 3D mode layouts are denser on the ball surface, so they need the
    # tighter value. Beta and the vote minibatch are tuned, the rest is
    # published.
    beta = 0.55 if dim == 2 else 0.2
    return LangevinConfig(kernel_size=kernel, step_size=step, k=k,
                          num_levels=num_levels,
                          steps_per_level=max(1, total_steps // num_levels),
                          num_walkers=num_walkers, seed=seed,
                          beta=beta, votes_per_step=512)


@dataclass
class WalkerTrace:
    """Final walker positions plus optional recorded trajectory snapshots."""

    finals: np.ndarray                      # (num_walkers, d)
    k: float
    positions: list = field(default_factory=list)  # [(step, (num_walkers, d))]

    def to_json_lines(self) -> str:
        lines = []
        for step, pos in self.positions:
            for i, x in enumerate(pos):
                coords = ",".join(f"{float(v):.9g}" for v in x)
                lines.append(f'{{"walker":{i},"step":{step},"position":[{coords}]}}')
        return "\n".join(lines)


def walk_many(X, G, k):
    """Apply displacements G to positions X, teleporting through the ball."""
    X = np.atleast_2d(np.asarray(X, float))
    G = np.atleast_2d(np.asarray(G, float))
    if k <= 0.0:
        return X + G
    rx = np.linalg.norm(X, axis=1)
    if np.any(rx < k - 1e-9):
        raise GeometryError("walk from inside the invalid ball")
    target = X + G
    inside = np.linalg.norm(target, axis=1) < k
    if not inside.any():
        return target

    out = target.copy()
    x = X[inside]
    g = G[inside]
    a = np.einsum("ij,ij->i", g, g)
    b = 2.0 * np.einsum("ij,ij->i", x, g)
    c = np.einsum("ij,ij->i", x, x) - k**2
    disc = np.sqrt(np.maximum(b**2 - 4.0 * a * c, 0.0))
    t_in = np.clip((-b - disc) / (2.0 * a), 0.0, 1.0)
    bnd = x + t_in[:, None] * g            # entry point on the sphere
    bhat = bnd / k
    v = target[inside] - bnd               # leftover displacement
    v_rad = np.einsum("ij,ij->i", v, bhat)  # <= 0: pointing inward
    v_tan = v - v_rad[:, None] * bhat
    vt = np.linalg.norm(v_tan, axis=1)
    radial_len = np.abs(v_rad)

    u = -bhat                               # antipodal boundary point, unit
    with np.errstate(invalid="ignore"):
        that = np.where((vt > 1e-300)[:, None], -v_tan / np.maximum(vt, 1e-300)[:, None], 0.0)
    theta = vt / k                          # tangential leftover as arc length
    sphere_pt = np.cos(theta)[:, None] * u + np.sin(theta)[:, None] * that
    out[inside] = sphere_pt * (k + radial_len)[:, None]
    return out


def walk(x, g, k):
    """Single-point variant of walk_many."""
    return walk_many(np.asarray(x, float)[None], np.asarray(g, float)[None], k)[0]


def run_langevin(space: TransformSpace, geo: GeodesicSpace,
                 cfg: LangevinConfig) -> WalkerTrace:
    """Anneal walkers over a geometric noise schedule and return their trace.

    Per level i (noise scale s_i) each step does a noise walk followed by a
    gradient walk:

        x <- walk(x, beta * sqrt(alpha) * (s_i / sigma_max) * eps)
        x <- walk(x, -(alpha / sigma_max^2) * g_{s_i}(x))

    The gradient coefficient is alpha * s_i^2 / (2 * sigma_max^2) applied to
    the density-flow field 2 * g / s_i^2; with a single level and
    alpha = sigma^2 one step reduces exactly to a Gaussian mean-shift update.
    """
    k = space.k if geo.mode == "riemannian" else 0.0
    if geo.mode == "riemannian" and abs(space.k - geo.k) > 1e-12:
        raise GeometryError("space and geodesic disagree on k")
    if space.dim != geo.dim:
        raise GeometryError("space and geodesic disagree on dim")

    d = space.dim
    m = cfg.num_walkers
    seqs = np.random.SeedSequence(cfg.seed).spawn(m + 1)
    rngs = [np.random.default_rng(s) for s in seqs[:m]]
    batch_rng = np.random.default_rng(seqs[m])

    # uniform direction, radius uniform over the valid annulus [k, k + sqrt(d)]
    x = np.empty((m, d))
    for i, rng in enumerate(rngs):
        v = rng.standard_normal(d)
        v /= max(np.linalg.norm(v), 1e-12)
        x[i] = v * (k + rng.uniform(0.0, np.sqrt(d)))

    sigmas = np.geomspace(cfg.sigma_max, cfg.kernel_size, cfg.num_levels)
    alpha = cfg.step_size
    grad_coeff = alpha / cfg.sigma_max**2
    trace = WalkerTrace(finals=x, k=k)

    num_votes = space.samples.shape[0]
    batch = cfg.votes_per_step if 0 < cfg.votes_per_step < num_votes else 0

    step_no = 0
    for sigma in sigmas:
        field_i = ScoreField(space, geo, float(sigma))
        noise_scale = cfg.beta * np.sqrt(alpha) * sigma / cfg.sigma_max
        noise = np.stack([rng.standard_normal((cfg.steps_per_level, d)) for rng in rngs], axis=1)
        for t in range(cfg.steps_per_level):
            if noise_scale > 0:
                x = walk_many(x, noise_scale * noise[t], k)
            ids = batch_rng.choice(num_votes, batch, replace=False) if batch else None
            g = score_many(field_i, x, vote_ids=ids)
            x = walk_many(x, -grad_coeff * g, k)
            step_no += 1
            if cfg.trace_every and step_no % cfg.trace_every == 0:
                trace.positions.append((step_no, x.copy()))

    trace.finals = x
    return trace
