"""Premetric on the reflective transformation space and the kernel score field.

The space is R^d minus an open "invalid ball" of radius k around the origin,
with antipodal boundary points identified (a plane through the origin is the
same plane with the opposite normal). The distance between two embedded
symmetries is the length of the shortest path that either stays outside the
ball or jumps through it via the antipodal identification.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import GeometryError
from .hough import TransformSpace

try:
    from ._fastscore import score_kernel as _score_kernel
    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dep, but degrade anyway
    _score_kernel = None
    _HAVE_NUMBA = False

_EPS = 1e-12


@dataclass(frozen=True)
class GeodesicSpace:
    """Geometry of a transformation space: ball radius and distance mode."""

    k: float
    dim: int
    mode: str = "riemannian"  # riemannian | euclidean

    def __post_init__(self):
        if self.mode not in ("riemannian", "euclidean"):
            raise GeometryError(f"unknown mode {self.mode!r}")
        if self.mode == "euclidean" and self.k != 0.0:
            raise GeometryError("euclidean mode forces k = 0")
        if self.k < 0:
            raise GeometryError("k must be >= 0")


def _orth_unit(v):
    """Any unit vector orthogonal to v (batched over leading axes)."""
    out = np.zeros_like(v)
    # pick the axis least aligned with v, then Gram-Schmidt
    idx = np.argmin(np.abs(v), axis=-1)
    np.put_along_axis(out, idx[..., None], 1.0, axis=-1)
    out -= np.sum(out * v, axis=-1, keepdims=True) * v
    return out / np.maximum(np.linalg.norm(out, axis=-1, keepdims=True), _EPS)


def _alhazen_theta(rx, rw, psi, k, iters, ngrid=25):
    """Minimize f(t) = |x - z(t)| + |w - z(t)| over the boundary arc t in [0, psi].

    x sits at angle 0 and radius rx, w at angle psi and radius rw, z(t) at
    radius k. Scalar-array coarse scan plus golden section; returns
    (theta, d1, d2) with d1 = |x - z|, d2 = |w - z|.
    """
    cpsi = np.cos(psi)
    spsi = np.sin(psi)

    def parts(theta):
        ct = np.cos(theta)
        st = np.sin(theta)
        d1 = np.sqrt(np.maximum(rx**2 + k**2 - 2.0 * rx * k * ct, 0.0))
        cpt = cpsi * ct + spsi * st  # cos(psi - theta)
        d2 = np.sqrt(np.maximum(rw**2 + k**2 - 2.0 * rw * k * cpt, 0.0))
        return d1, d2

    def f(theta):
        d1, d2 = parts(theta)
        return d1 + d2

    grid = np.linspace(0.0, 1.0, ngrid)
    vals = np.stack([f(psi * t) for t in grid])
    best = np.argmin(vals, axis=0)
    step = psi / (ngrid - 1)
    lo = psi * grid[np.maximum(best - 1, 0)]
    hi = np.minimum(lo + 2.0 * step, psi)

    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    for _ in range(iters):
        c = b - invphi * (b - a)
        e = a + invphi * (b - a)
        left = f(c) < f(e)
        b = np.where(left, e, b)
        a = np.where(left, a, c)
    theta = 0.5 * (a + b)
    d1, d2 = parts(theta)
    return theta, d1, d2


def _alhazen_newton(rx, rw, psi, k):
    """Fast boundary-arc minimizer for the score path.

    Initializes theta from the projection of the x -> w chord onto the sphere
    and polishes with three Newton steps on f'(theta) = 0. The distance error
    is second order in the theta error, which is all the kernel score needs.
    Returns (theta, d1, d2).
    """
    cpsi = np.cos(psi)
    spsi = np.sin(psi)
    wx = rw * cpsi
    wy = rw * spsi
    dx = wx - rx
    dy = wy
    t = np.clip(-(rx * dx) / np.maximum(dx**2 + dy**2, _EPS), 0.0, 1.0)
    theta = np.clip(np.arctan2(t * dy, rx + t * dx), 0.0, psi)
    for _ in range(3):
        ct = np.cos(theta)
        st = np.sin(theta)
        cpt = cpsi * ct + spsi * st   # cos(psi - theta)
        spt = spsi * ct - cpsi * st   # sin(psi - theta)
        d1 = np.sqrt(np.maximum(rx**2 + k**2 - 2.0 * rx * k * ct, _EPS))
        d2 = np.sqrt(np.maximum(rw**2 + k**2 - 2.0 * rw * k * cpt, _EPS))
        g = rx * st / d1 - rw * spt / d2
        gp = (rx * ct / d1 - (rx * st) ** 2 * k / d1**3
              + rw * cpt / d2 - (rw * spt) ** 2 * k / d2**3)
        theta = np.clip(theta - g / np.maximum(gp, 1e-6), 0.0, psi)
    ct = np.cos(theta)
    st = np.sin(theta)
    cpt = cpsi * ct + spsi * st
    d1 = np.sqrt(np.maximum(rx**2 + k**2 - 2.0 * rx * k * ct, 0.0))
    d2 = np.sqrt(np.maximum(rw**2 + k**2 - 2.0 * rw * k * cpt, 0.0))
    return theta, d1, d2


def _through_branch_offsphere(x_flat, w_flat, k, iters):
    """Minimize |x - z| + |w - z| over the sphere |z| = k in the plane of x, w.

    Only called for pairs whose x->w segment misses the ball (the Alhazen
    configuration, no closed form). Returns (distance, z*).
    """
    rx = np.linalg.norm(x_flat, axis=1)
    rw = np.linalg.norm(w_flat, axis=1)
    e1 = x_flat / rx[:, None]
    c1 = np.einsum("ij,ij->i", w_flat, e1)
    u = w_flat - c1[:, None] * e1
    uu = np.linalg.norm(u, axis=1)

    # collinear pairs: segment misses the ball, so w lies on the +x ray and
    # the optimum is the boundary point under x
    col = uu < 1e-14
    e2 = np.where(col[:, None], _orth_unit(e1), u / np.maximum(uu, _EPS)[:, None])
    psi = np.arctan2(uu, c1)
    psi = np.where(col, 0.0, psi)

    theta, d1, d2 = _alhazen_theta(rx, rw, psi, k, iters)
    z = k * (np.cos(theta)[:, None] * e1 + np.sin(theta)[:, None] * e2)
    return d1 + d2, z


def geodesic_pairwise(X, Y, k, want_grad=False, refine_iters=60):
    """All-pairs geodesic distances (and optionally gradients w.r.t. x).

    X: (M, d) query points, Y: (N, d) targets, both with norm >= k.
    Returns D (M, N) and, if requested, G (M, N, d) with unit rows wherever
    the distance is nonzero.
    """
    X = np.atleast_2d(np.asarray(X, float))
    Y = np.atleast_2d(np.asarray(Y, float))
    m, d = X.shape
    n = Y.shape[0]
    if k <= 0.0:
        diff = X[:, None, :] - Y[None, :, :]
        dist = np.linalg.norm(diff, axis=2)
        if not want_grad:
            return dist
        grad = diff / np.maximum(dist, _EPS)[:, :, None]
        grad[dist < _EPS] = 0.0
        return dist, grad

    rx = np.linalg.norm(X, axis=1)  # (M,)
    ry = np.linalg.norm(Y, axis=1)  # (N,)
    dot = X @ Y.T  # (M, N)
    diff = X[:, None, :] - Y[None, :, :]
    dist = np.linalg.norm(diff, axis=2)

    rx2 = (rx**2)[:, None]
    ry2 = (ry**2)[None, :]

    # --- outside branch: straight if the segment misses the open ball
    with np.errstate(invalid="ignore", divide="ignore"):
        t_seg = np.clip((rx2 - dot) / np.maximum(dist**2, _EPS), 0.0, 1.0)
    h2_seg = rx2 + 2.0 * t_seg * (dot - rx2) + t_seg**2 * dist**2
    miss = h2_seg >= k**2 - 1e-15

    sx = np.sqrt(np.maximum(rx2 - k**2, 0.0))
    sy = np.sqrt(np.maximum(ry2 - k**2, 0.0))
    cos_phi = np.clip(dot / np.maximum(rx[:, None] * ry[None, :], _EPS), -1.0, 1.0)
    phi = np.arccos(cos_phi)
    beta_x = np.arccos(np.clip(k / np.maximum(rx, k), -1.0, 1.0))[:, None]
    beta_y = np.arccos(np.clip(k / np.maximum(ry, k), -1.0, 1.0))[None, :]
    theta_arc = np.maximum(phi - beta_x - beta_y, 0.0)
    d_arc = sx + sy + k * theta_arc
    d_out = np.where(miss, dist, d_arc)

    # --- through-origin branch: x -> z on the sphere, teleport to -z, -> y
    # If the segment from x to -y crosses the ball the optimum is on that
    # segment and the branch length is |x + y|; otherwise minimize on the
    # sphere (no closed form).
    dist_xw = np.sqrt(np.maximum(rx2 + ry2 + 2.0 * dot, 0.0))  # |x + y|
    t_w = np.clip((rx2 + dot) / np.maximum(dist_xw**2, _EPS), 0.0, 1.0)
    h2_w = rx2 + 2.0 * t_w * (-dot - rx2) + t_w**2 * dist_xw**2
    hit = h2_w <= k**2 + 1e-15
    d_thr = np.where(hit, dist_xw, np.inf)

    # pairs where the through branch cannot beat the outside branch need no
    # sphere search: its length is at least max(|x + y|, rx + ry - 2k)
    thr_lb = np.maximum(dist_xw, rx[:, None] + ry[None, :] - 2.0 * k)
    offs = (~hit) & (d_out > thr_lb - 1e-12)
    z_off = None
    if offs.any():
        idx = np.nonzero(offs)
        x_flat = X[idx[0]]
        w_flat = -Y[idx[1]]
        d_off, z_off = _through_branch_offsphere(x_flat, w_flat, k, refine_iters)
        d_thr[idx] = d_off

    D = np.minimum(d_out, d_thr)
    if not want_grad:
        return D

    # --- gradient: unit tangent of the shortest path at x, pointing away
    # from y. Ties go to the outside branch.
    through = d_thr < d_out

    G = np.empty((m, n, d))
    # straight segment
    G[...] = diff / np.maximum(dist, _EPS)[:, :, None]

    # tangent-arc: unit vector from the tangency point on x's side to x
    arc = (~miss) & (~through)
    if arc.any():
        ia = np.nonzero(arc)
        xa = X[ia[0]]
        ya = Y[ia[1]]
        rxa = rx[ia[0]]
        e1 = xa / rxa[:, None]
        yp = ya - np.einsum("ij,ij->i", ya, e1)[:, None] * e1
        ypn = np.linalg.norm(yp, axis=1)
        e2 = np.where((ypn < 1e-14)[:, None], _orth_unit(e1), yp / np.maximum(ypn, _EPS)[:, None])
        sxa = np.sqrt(np.maximum(rxa**2 - k**2, 0.0))
        cb = np.clip(k / rxa, 0.0, 1.0)
        sb = np.sqrt(np.maximum(1.0 - cb**2, 0.0))
        tangent_pt = k * (cb[:, None] * e1 + sb[:, None] * e2)
        ga = (xa - tangent_pt) / np.maximum(sxa, _EPS)[:, None]
        # x exactly on the sphere: the path leaves along the sphere
        on_sphere = sxa < 1e-9
        if on_sphere.any():
            ga[on_sphere] = -e2[on_sphere]
        G[ia] = ga

    if through.any():
        it = np.nonzero(through)
        xt = X[it[0]]
        yt = Y[it[1]]
        hit_t = hit[it]
        gt = np.empty_like(xt)
        if hit_t.any():
            # z* lies on the segment x -> -y, so the direction is (x + y)/|x + y|
            s = xt[hit_t] + yt[hit_t]
            sn = np.linalg.norm(s, axis=1)
            gdir = s / np.maximum(sn, _EPS)[:, None]
            # antipodal boundary pair (x = -y on the sphere): distance 0
            gdir[sn < 1e-12] = 0.0
            gt[hit_t] = gdir
        if (~hit_t).any():
            # reuse z* from the off-sphere minimization
            sub = np.nonzero(offs)
            sel = through[sub]
            zx = X[sub[0][sel]] - z_off[sel]
            zn = np.linalg.norm(zx, axis=1)
            gz = zx / np.maximum(zn, _EPS)[:, None]
            rad = X[sub[0][sel]]
            gz[zn < 1e-9] = rad[zn < 1e-9] / np.maximum(
                np.linalg.norm(rad[zn < 1e-9], axis=1, keepdims=True), _EPS)
            gt[~hit_t] = gz
        G[it] = gt

    G[D < _EPS] = 0.0
    return D, G


def _check_valid(v, k, name="point"):
    if np.linalg.norm(v) < k - 1e-9:
        raise GeometryError(f"invalid transform {name}: inside the ball of radius {k}")


def geodesic(x, y, space: GeodesicSpace) -> float:
    """Distance between two transformation-space points under the premetric."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if space.mode == "euclidean":
        return float(np.linalg.norm(x - y))
    _check_valid(x, space.k)
    _check_valid(y, space.k)
    return float(geodesic_pairwise(x[None], y[None], space.k, refine_iters=90)[0, 0])


def geodesic_grad(x, y, space: GeodesicSpace):
    """Gradient of geodesic(x, y) w.r.t. x; unit norm wherever defined."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if np.linalg.norm(x - y) < _EPS:
        raise GeometryError("gradient undefined at x == y")
    if space.mode == "euclidean":
        return (x - y) / np.linalg.norm(x - y)
    _check_valid(x, space.k)
    _check_valid(y, space.k)
    _, g = geodesic_pairwise(x[None], y[None], space.k, want_grad=True, refine_iters=90)
    return g[0, 0]


@dataclass(frozen=True)
class ScoreField:
    """Kernel-weighted gradient field of the smoothed vote density."""

    data: TransformSpace
    space: GeodesicSpace
    sigma: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise GeometryError("sigma must be > 0")
        if self.space.mode == "riemannian" and abs(self.data.k - self.space.k) > 1e-12:
            raise GeometryError("data and geodesic space disagree on k")


def kernel_weights(field: ScoreField, x):
    """Normalized kernel weights exp(-d^2/sigma^2) of every vote at x."""
    x = np.asarray(x, float)
    k = field.space.k if field.space.mode == "riemannian" else 0.0
    dist = geodesic_pairwise(x[None], field.data.samples, k, refine_iters=24)[0]
    logw = -(dist**2) / field.sigma**2
    logw -= logw.max()
    w = np.exp(logw)
    return w / w.sum()


def score_many(field: ScoreField, X, vote_ids=None):
    """Score g(x) = sum_i w_i d(x, y_i) grad_x d(x, y_i) for a batch of points.

    The Langevin step x <- x - step * g moves walkers toward the data. In
    every branch of the premetric the gradient direction is a combination
    a * x + b * y of the endpoints, so the whole sum needs only (M, N) scalar
    arrays and one matrix product; pairs whose kernel weight is provably
    negligible skip the boundary-arc minimization.

    vote_ids restricts the sum to a subset of the votes (the stochastic
    minibatch estimate used by the annealing loop); None means all of them.
    """
    X = np.atleast_2d(np.asarray(X, float))
    Y = field.data.samples
    if vote_ids is not None:
        Y = Y[vote_ids]
    if Y.shape[0] == 0:
        raise GeometryError("empty data")
    k = field.space.k if field.space.mode == "riemannian" else 0.0
    sig2 = field.sigma**2

    rx2 = np.einsum("ij,ij->i", X, X)[:, None]
    ry2 = np.einsum("ij,ij->i", Y, Y)[None, :]
    dot = X @ Y.T
    d2_xy = np.maximum(rx2 + ry2 - 2.0 * dot, 0.0)
    dist = np.sqrt(d2_xy)

    if k <= 0.0:
        logw = -d2_xy / sig2
        logw -= logw.max(axis=1, keepdims=True)
        w = np.exp(logw)
        w /= w.sum(axis=1, keepdims=True)
        # c * u = w * dist * (x - y)/dist = w * (x - y), and the weights sum to 1
        return X - w @ Y

    if _HAVE_NUMBA:
        return _score_kernel(np.ascontiguousarray(X), np.ascontiguousarray(Y),
                             float(k), float(sig2))
    return _score_numpy(X, Y, rx2, ry2, dot, d2_xy, dist, float(k), float(sig2))


def _score_numpy(X, Y, rx2, ry2, dot, d2_xy, dist, k, sig2):
    """Vectorized numpy score path; the fallback and cross-check for the
    compiled kernel."""
    eps = _EPS
    k2 = k * k
    rx = np.sqrt(rx2)
    ry = np.sqrt(ry2)

    # outside branch
    t_seg = np.clip((rx2 - dot) / np.maximum(d2_xy, eps), 0.0, 1.0)
    h2_seg = rx2 + 2.0 * t_seg * (dot - rx2) + t_seg**2 * d2_xy
    miss = h2_seg >= k2 - 1e-15
    sx = np.sqrt(np.maximum(rx2 - k2, 0.0))
    sy = np.sqrt(np.maximum(ry2 - k2, 0.0))
    cphi = np.clip(dot / np.maximum(rx * ry, eps), -1.0, 1.0)
    phi = np.arccos(cphi)
    beta_x = np.arccos(np.clip(k / np.maximum(rx, k), -1.0, 1.0))
    beta_y = np.arccos(np.clip(k / np.maximum(ry, k), -1.0, 1.0))
    d_out = np.where(miss, dist, sx + sy + k * np.maximum(phi - beta_x - beta_y, 0.0))

    # through branch
    dxw2 = np.maximum(rx2 + ry2 + 2.0 * dot, 0.0)
    dxw = np.sqrt(dxw2)
    t_w = np.clip((rx2 + dot) / np.maximum(dxw2, eps), 0.0, 1.0)
    h2_w = rx2 + 2.0 * t_w * (-dot - rx2) + t_w**2 * dxw2
    hit = h2_w <= k2 + 1e-15
    d_thr = np.where(hit, dxw, np.inf)

    thr_lb = np.maximum(dxw, rx + ry - 2.0 * k)
    cand = (~hit) & (d_out > thr_lb)
    # a pair cannot influence the softmax when even its most optimistic
    # distance is far beyond the best distance already known in its row
    row_ub2 = np.minimum(d_out, d_thr).min(axis=1, keepdims=True) ** 2
    need = cand & (np.minimum(d_out, thr_lb) ** 2 <= row_ub2 + 30.0 * sig2)
    theta_f = d1_f = None
    need_idx = None
    if need.any():
        need_idx = np.nonzero(need)
        im, jn = need_idx
        rxn = rx[im, 0]
        rwn = ry[0, jn]
        psi = np.arccos(np.clip(-dot[need] / np.maximum(rxn * rwn, eps), -1.0, 1.0))
        theta_f, d1_f, d2_f = _alhazen_newton(rxn, rwn, psi, k)
        d_thr[need] = d1_f + d2_f

    D = np.minimum(d_out, d_thr)
    logw = -(D * D) / sig2
    logw -= logw.max(axis=1, keepdims=True)
    w = np.exp(logw)
    w /= w.sum(axis=1, keepdims=True)
    c = w * D

    through = d_thr < d_out
    arc = ~miss & ~through

    # straight-segment contribution is the default
    inv = c / np.maximum(dist, eps)
    A = inv
    B = -inv

    # perpendicular component of y w.r.t. x, shared by the arc and
    # through-miss branches; ry * sin(phi) avoids the cancellation in
    # sqrt(ry^2 - dot^2/rx^2) for near-collinear pairs
    sphi = np.sqrt(np.maximum(1.0 - cphi * cphi, 0.0))
    ypn = np.maximum(ry * sphi, 1e-9)

    if arc.any():
        cb = np.clip(k / np.maximum(rx, k), 0.0, 1.0)
        sb = np.sqrt(np.maximum(1.0 - cb * cb, 0.0))
        sx_safe = np.maximum(sx, eps)
        a_arc = (1.0 - k * cb / rx + k * sb * dot / (rx2 * ypn)) / sx_safe
        b_arc = -(k * sb / ypn) / sx_safe
        # x on the sphere: the path starts along the boundary, toward -e2
        on_sph = np.broadcast_to(sx < 1e-9, c.shape)
        a_arc = np.where(on_sph, dot / (rx2 * ypn), a_arc)
        b_arc = np.where(on_sph, -1.0 / ypn, b_arc)
        A = np.where(arc, c * a_arc, A)
        B = np.where(arc, c * b_arc, B)

    thr_hit = through & hit
    if thr_hit.any():
        a_hit = c / np.maximum(dxw, eps)
        A = np.where(thr_hit, a_hit, A)
        B = np.where(thr_hit, a_hit, B)

    thr_miss = through & ~hit
    if thr_miss.any():
        # reuse theta from the minimization; thr_miss is a subset of need
        sel = thr_miss[need]
        im, jn = need_idx
        im, jn = im[sel], jn[sel]
        ct = np.cos(theta_f[sel])
        st = np.sin(theta_f[sel])
        d1s = np.maximum(d1_f[sel], eps)
        rxs = rx[im, 0]
        ypns = ypn[im, jn]
        dots = dot[im, jn]
        a_ms = (1.0 - k * ct / rxs - k * st * dots / (rxs**2 * ypns)) / d1s
        b_ms = (k * st / ypns) / d1s
        cs = c[im, jn]
        A[im, jn] = cs * a_ms
        B[im, jn] = cs * b_ms

    zero = D < eps
    if zero.any():
        A[zero] = 0.0
        B[zero] = 0.0
    return A.sum(axis=1)[:, None] * X + B @ Y


def score(field: ScoreField, x):
    """Score at a single point; see score_many."""
    x = np.asarray(x, float)
    if field.space.mode == "riemannian":
        _check_valid(x, field.space.k)
    return score_many(field, x[None])[0]
