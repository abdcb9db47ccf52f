"""Acceptance suite: one test per acceptance criterion, each printing a
single pass/fail line with its headline numbers.

The heavy detection runs (noisy-square sweep) are computed once and shared
between the criteria that need them.
"""

import dataclasses
import time

import numpy as np
import pytest
from scipy.spatial.distance import cdist

from symseek.extraction import (SymmetryResult, centroids, cluster_indices,
                                compute_support, dbscan,
                                default_extract_config, extract)
from symseek.geodesic import GeodesicSpace, geodesic, geodesic_grad
from symseek.geometry import PointCloud, add_noise, chamfer, normalize, reflect_point
from symseek.hough import (HoughPlane, TransformSample, TransformSpace,
                           build_reflective_space, build_translation_space,
                           compose_rotation, decode_sample, embed_plane)
from symseek.langevin import LangevinConfig, default_config, run_langevin, walk_many
from symseek.meanshift import MeanShiftConfig, mean_shift, mean_shift_step
from symseek.metrics import (GroundTruth, association, compress, decompress,
                             match_f1)
from symseek.shapes import gen_composite, gen_cube, gen_square

from graph_oracle import AnnulusGraph

GEO2 = GeodesicSpace(0.3, 2)


def report(capsys, num, ok, detail):
    with capsys.disabled():
        print(f"criterion {num}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, detail


# ---------------------------------------------------------------- pipelines

def langevin_pipeline(cloud, seed, support_eps, steps=5000, votes=2000):
    space = build_reflective_space(cloud, num_pairs=votes, k=0.3, seed=seed)
    cfg = default_config(2, total_steps=steps, seed=seed)
    trace = run_langevin(space, GEO2, cfg)
    ecfg = default_extract_config(cfg.kernel_size, cfg.num_walkers, 2)
    ecfg = dataclasses.replace(ecfg, support_eps=support_eps)
    return extract(trace, space, cloud, ecfg)


def meanshift_pipeline(space, cloud, support_eps, bandwidth, tau=0.1):
    modes = mean_shift(space, MeanShiftConfig(bandwidth=bandwidth))
    return modes_to_results(modes, cloud, support_eps, tau)


def modes_to_results(modes, cloud, support_eps, tau=0.1, k=0.3):
    results = []
    for m in np.atleast_2d(modes):
        r = np.linalg.norm(m)
        if r < k:
            m = m * (k / max(r, 1e-12))
        plane = decode_sample(TransformSample(m, k))
        info = compute_support(plane, cloud, support_eps)
        if info.significance > tau:
            results.append(SymmetryResult("reflective", plane=plane,
                                          significance=info.significance))
    results.sort(key=lambda r: -r.significance)
    return results


_noise_cache = {}


def noisy_square_runs(noise):
    """Langevin and mean-shift recalls on the noisy square, 5 seeds.

    The detector uses the full published vote count (50K pairs); the per-step
    vote minibatch keeps the runtime identical to smaller vote clouds. The
    baseline's bandwidth is swept over {0.02, 0.05, 0.1} and the best F1 per
    run is kept, since no published bandwidth exists for noisy inputs.
    """
    if noise in _noise_cache:
        return _noise_cache[noise]
    base = normalize(gen_square(400))
    gt = GroundTruth(base.gt_symmetries)
    eps = max(0.02, 2.0 * noise)
    rows = []
    for seed in range(5):
        cloud = add_noise(base, noise, seed=seed)
        lres = langevin_pipeline(cloud, seed, eps, votes=50_000)
        _, lrec, lf1, _ = match_f1(lres, gt, 0.1, GEO2)
        space = build_reflective_space(cloud, num_pairs=50_000, k=0.3, seed=seed)
        mrec, mf1 = 0.0, 0.0
        for h in (0.02, 0.05, 0.1):
            mres = meanshift_pipeline(space, cloud, eps, h)
            _, rec, f1, _ = match_f1(mres, gt, 0.1, GEO2)
            mrec = max(mrec, rec)  # most favorable bandwidth per measure
            mf1 = max(mf1, f1)
        rows.append((lrec, lf1, mrec, mf1, cloud))
    _noise_cache[noise] = rows
    return rows


# ---------------------------------------------------------------- criteria

def test_criterion_01_square_detection(capsys):
    """Clean square, scaled 2D defaults: perfect F1 inside the time budget."""
    cloud = normalize(gen_square(400))
    gt = GroundTruth(cloud.gt_symmetries)
    t0 = time.perf_counter()
    results = langevin_pipeline(cloud, seed=0, support_eps=0.02)
    elapsed = time.perf_counter() - t0
    p, r, f1, _ = match_f1(results, gt, 0.05, GEO2)
    ok = f1 == 1.0 and elapsed < 120.0
    report(capsys, 1, ok,
           f"square F1={f1:.3f} (P={p:.2f} R={r:.2f}, {len(results)} planes) "
           f"in {elapsed:.0f}s (budget 120s)")


def test_criterion_02_noise_robustness(capsys):
    recs = {}
    for noise in (0.01, 0.03, 0.05):
        rows = noisy_square_runs(noise)
        lrec = float(np.mean([r[0] for r in rows]))
        mrec = float(np.mean([r[2] for r in rows]))
        recs[noise] = (lrec, mrec)
    ordering = all(l >= m for l, m in recs.values())
    floor = recs[0.03][0] >= 0.75
    detail = " ".join(f"{int(n*100)}%:L={l:.2f}/MS={m:.2f}"
                      for n, (l, m) in recs.items())
    report(capsys, 2, ordering and floor,
           f"recall (5 seeds) {detail}; need L>=MS everywhere and L>=0.75 at 3%")


def test_criterion_03_cube_detection(capsys):
    cloud = normalize(gen_cube(2400))
    t0 = time.perf_counter()
    space = build_reflective_space(cloud, num_pairs=50_000, k=0.5, seed=0)
    cfg = default_config(3, total_steps=5000)
    trace = run_langevin(space, GeodesicSpace(0.5, 3), cfg)
    results = extract(trace, space, cloud,
                      default_extract_config(cfg.kernel_size, cfg.num_walkers, 3))
    elapsed = time.perf_counter() - t0
    axis_ids = set()
    for res in results:
        n, l = res.plane.normal, res.plane.offset
        is_axis = abs(l) < 0.02 and sorted(np.abs(n))[-2] < 0.05
        if is_axis and res.significance > 0.9:
            axis_ids.add(int(np.argmax(np.abs(n))))
    ok = len(axis_ids) == 3 and elapsed < 600.0
    report(capsys, 3, ok,
           f"cube axis planes with significance>0.9: {len(axis_ids)}/3 "
           f"({len(results)} planes total) in {elapsed:.0f}s (budget 600s)")


def test_criterion_04_geodesic_vs_graph_oracle(capsys):
    worst = 0.0
    rng = np.random.default_rng(100)
    for k in (0.3, 0.5):
        graph = AnnulusGraph(k, r_max=k + 1.0, n_theta=512, n_r=64, window=10)
        geo = GeodesicSpace(k, 2)
        # random valid points: a random point has radius > k almost surely,
        # so draw interior grid nodes (the premetric is defined with straight
        # legs that may clip the ball, which for endpoints exactly on the
        # boundary diverges from the valid-path infimum the graph computes)
        n_nodes = graph.xy.shape[0]
        sources = rng.integers(graph.n_theta, n_nodes, size=10)
        targets = rng.integers(graph.n_theta, n_nodes, size=20)
        for s in sources:
            dist = graph.distances_from(int(s))
            for t in targets:
                if s == t:
                    continue
                got = geodesic(graph.point(int(s)), graph.point(int(t)), geo)
                ref = dist[int(t)]
                if ref > 1e-9:
                    worst = max(worst, abs(got - ref) / ref)
    ok = worst < 0.02
    report(capsys, 4, ok,
           f"analytic vs graph shortest path, k in {{0.3, 0.5}}, 200 pairs/k: "
           f"worst relative error {worst:.4f} (tolerance 0.02)")


def outside_branch_length(x, y, k):
    """Path length avoiding the ball: straight if the segment misses it,
    else tangent-arc-tangent. Used only to spot branch ties."""
    rx, ry = np.linalg.norm(x), np.linalg.norm(y)
    seg = y - x
    t = np.clip(-(x @ seg) / max(seg @ seg, 1e-300), 0.0, 1.0)
    if np.linalg.norm(x + t * seg) >= k:
        return float(np.linalg.norm(seg))
    phi = np.arccos(np.clip(x @ y / (rx * ry), -1.0, 1.0))
    arc = max(phi - np.arccos(k / rx) - np.arccos(k / ry), 0.0)
    return float(np.sqrt(rx**2 - k**2) + np.sqrt(ry**2 - k**2) + k * arc)


def through_branch_length(x, y, k):
    """Brute-force length of the teleport path x -> z, -z -> y over boundary
    points z in the plane spanned by x and -y. Used only to spot branch ties."""
    e1 = x / np.linalg.norm(x)
    w = -y - (-y @ e1) * e1
    n = np.linalg.norm(w)
    if n < 1e-12:
        w = np.zeros_like(e1)
        w[np.argmin(np.abs(e1))] = 1.0
        w -= (w @ e1) * e1
        n = np.linalg.norm(w)
    e2 = w / n
    th = np.linspace(0.0, 2.0 * np.pi, 8193)
    z = k * (np.cos(th)[:, None] * e1 + np.sin(th)[:, None] * e2)
    vals = np.linalg.norm(z - x, axis=1) + np.linalg.norm(z + y, axis=1)
    return float(vals.min())


def test_criterion_05_gradient_finite_differences(capsys):
    rng = np.random.default_rng(101)
    h = 1e-5
    worst_rel, worst_norm = 0.0, 0.0
    checked = 0
    for dim, k in ((2, 0.3), (3, 0.5)):
        geo = GeodesicSpace(k, dim)
        want = 250
        done = 0
        while done < want:
            x = rng.standard_normal(dim)
            x *= rng.uniform(k + 0.05, 1.2) / np.linalg.norm(x)
            y = rng.standard_normal(dim)
            y *= rng.uniform(k + 0.05, 1.2) / np.linalg.norm(y)
            if np.linalg.norm(x - y) < 0.05:
                continue
            # exclude branch-tie neighborhoods (not differentiable there)
            if abs(outside_branch_length(x, y, k)
                   - through_branch_length(x, y, k)) < 5e-3:
                continue
            g = geodesic_grad(x, y, geo)
            worst_norm = max(worst_norm, abs(np.linalg.norm(g) - 1.0))
            fd = np.empty(dim)
            for a in range(dim):
                e = np.zeros(dim)
                e[a] = h
                fd[a] = (geodesic(x + e, y, geo) - geodesic(x - e, y, geo)) / (2 * h)
            worst_rel = max(worst_rel, np.linalg.norm(g - fd) / np.linalg.norm(fd))
            done += 1
            checked += 1
    ok = worst_rel < 1e-3 and worst_norm < 1e-6
    report(capsys, 5, ok,
           f"gradient vs central differences on {checked} pairs: worst relative "
           f"error {worst_rel:.2e} (<1e-3), worst |norm-1| {worst_norm:.2e} (<1e-6)")


def test_criterion_06_meanshift_equivalence(capsys):
    """Flat space, beta=0, alpha=h^2, full neighborhood: one annealed step is
    one Gaussian mean-shift step."""
    rng = np.random.default_rng(102)
    hband = 0.3
    votes = rng.standard_normal((300, 2))
    space = TransformSpace(votes, 0.0, 2, "translational")
    geo = GeodesicSpace(0.0, 2, mode="euclidean")
    cfg = LangevinConfig(kernel_size=hband, step_size=hband**2, sigma_max=hband,
                         num_levels=1, steps_per_level=1, num_walkers=100,
                         beta=0.0, seed=7, k=0.0, votes_per_step=0)
    trace = run_langevin(space, geo, cfg)
    seqs = np.random.SeedSequence(7).spawn(101)
    worst = 0.0
    for i, s in enumerate(seqs[:100]):
        r = np.random.default_rng(s)
        v = r.standard_normal(2)
        v /= np.linalg.norm(v)
        start = v * r.uniform(0.0, np.sqrt(2))
        expect = mean_shift_step(votes, start, hband)
        worst = max(worst, float(np.abs(trace.finals[i] - expect).max()))
    ok = worst < 1e-9
    report(capsys, 6, ok,
           f"one Langevin step vs one mean-shift step on 100 states: "
           f"max deviation {worst:.2e} (<1e-9)")


def test_criterion_07_walk_contract(capsys):
    k = 0.3
    rng = np.random.default_rng(103)
    n = 100_000
    v = rng.standard_normal((n, 2))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    X = v * rng.uniform(k, 1.5, n)[:, None]
    G = rng.standard_normal((n, 2)) * 0.5
    out = walk_many(X, G, k)
    min_norm = float(np.linalg.norm(out, axis=1).min())
    valid = min_norm >= k - 1e-9

    # radial entries preserve path length
    m = 2000
    xr = v[:m] * rng.uniform(k + 0.05, 1.5, m)[:, None]
    rx = np.linalg.norm(xr, axis=1)
    lengths = rng.uniform(rx - k + 1e-6, rx + k - 1e-6)
    gr = -xr / rx[:, None] * lengths[:, None]
    outr = walk_many(xr, gr, k)
    path = (rx - k) + (np.linalg.norm(outr, axis=1) - k)
    worst_len = float(np.abs(path - lengths).max())

    # continuity at the tangency: a step ending just outside the boundary vs
    # just inside it (the inside endpoint teleports to near the antipode,
    # which the antipodal identification makes the same point)
    geo = GeodesicSpace(k, 2)
    worst_cont = 0.0
    eps = 1e-9
    done = 0
    i = 0
    while done < 200:
        d = rng.standard_normal(2)
        d /= np.linalg.norm(d)
        x = v[i % n] * (k + 0.5)
        i += 1
        if d @ x < k + 0.05:
            continue  # boundary point k*d must be visible from x
        o1 = walk_many(x[None], (d * (k + eps) - x)[None], k)[0]
        o2 = walk_many(x[None], (d * (k - eps) - x)[None], k)[0]
        worst_cont = max(worst_cont, geodesic(o1, o2, geo))
        done += 1
    ok = valid and worst_len < 1e-9 and worst_cont < 1e-6
    report(capsys, 7, ok,
           f"walk contract on 1e5 samples: min |out|={min_norm:.6f} (>=k-1e-9), "
           f"radial path-length error {worst_len:.2e} (<1e-9), "
           f"tangency continuity gap {worst_cont:.2e} (<1e-6)")


def test_criterion_08_embedding_round_trips(capsys):
    rng = np.random.default_rng(104)
    worst_embed = worst_decode = 0.0
    n = 100_000
    for dim, k in ((2, 0.3), (3, 0.5)):
        half = n // 2
        nrm = rng.standard_normal((half, dim))
        nrm /= np.linalg.norm(nrm, axis=1, keepdims=True)
        offs = rng.uniform(0.0, 1.5, half)
        for i in range(half):
            plane = HoughPlane(nrm[i], offs[i])
            emb = embed_plane(plane, k)
            back = decode_sample(emb)
            worst_embed = max(worst_embed,
                              float(np.abs(back.normal - plane.normal).max()),
                              abs(back.offset - plane.offset))
            # embed(decode(x)) = x for valid embedded samples
            x = TransformSample(plane.normal * (k + offs[i]), k)
            re_emb = embed_plane(decode_sample(x), k)
            worst_decode = max(worst_decode,
                               float(np.abs(re_emb.embed - x.embed).max()))
    # reflection involution
    pts = rng.standard_normal((1000, 3))
    nvec = rng.standard_normal(3)
    nvec /= np.linalg.norm(nvec)
    plane = HoughPlane(nvec, 0.4)
    worst_inv = float(np.abs(reflect_point(reflect_point(pts, plane), plane) - pts).max())
    ok = worst_embed < 1e-12 and worst_decode < 1e-12 and worst_inv < 1e-12
    report(capsys, 8, ok,
           f"round trips on 1e5 planes: decode(embed) err {worst_embed:.2e}, "
           f"embed(decode) err {worst_decode:.2e}, involution err {worst_inv:.2e} "
           f"(all <1e-12)")


def test_criterion_09_metrics(capsys):
    cloud = normalize(gen_square(400))
    gt_planes = cloud.gt_symmetries
    assoc = association([gt_planes[0]], cloud, 0.02)

    comp, ratio = compress(cloud, gt_planes, support_eps=0.02)
    rec = decompress(comp)
    round_trip = chamfer(rec, cloud)

    # hand cases for the F1 arithmetic
    gt = GroundTruth([HoughPlane(np.array([1.0, 0.0]), 0.0),
                      HoughPlane(np.array([0.0, 1.0]), 0.0)])
    p1, r1, f1a, _ = match_f1([gt.symmetries[0]], gt, 0.05, GEO2)
    hand1 = (p1, r1, f1a) == (1.0, 0.5, 2 * 1.0 * 0.5 / 1.5)
    p2, r2, f2a, _ = match_f1(list(gt.symmetries) + [HoughPlane(np.array([1.0, 0.0]), 0.9)],
                              gt, 0.05, GEO2)
    hand2 = (p2, r2) == (2 / 3, 1.0) and f2a == 2 * (2 / 3) / (2 / 3 + 1.0)

    ok = (assoc == 1.0 and ratio <= 0.30 and round_trip <= 0.02
          and hand1 and hand2)
    report(capsys, 9, ok,
           f"association={assoc:.3f} (=1), compression ratio={ratio:.3f} (<=0.30), "
           f"round-trip chamfer={round_trip:.2e} (<=0.02), F1 hand cases "
           f"{'exact' if hand1 and hand2 else 'WRONG'}")


def test_criterion_10_extensions(capsys):
    # translation: composite shape with a known shift
    raw = gen_composite(400, shift=(1.0, 0.0))
    scale = np.abs(raw.points - raw.points.mean(axis=0)).max()
    cloud = normalize(raw)
    true_shift = raw.gt_translation / scale
    space = build_translation_space(cloud, num_pairs=3000, seed=0)
    geo = GeodesicSpace(0.0, 2, mode="euclidean")
    cfg = default_config(2, total_steps=3000, seed=0)
    cfg = dataclasses.replace(cfg, k=0.0)
    trace = run_langevin(space, geo, cfg)
    ecfg = default_extract_config(cfg.kernel_size, cfg.num_walkers, 2)
    results = extract(trace, space, cloud, ecfg)
    err = min((min(np.linalg.norm(r.translation - true_shift),
                   np.linalg.norm(r.translation + true_shift))
               for r in results if r.translation is not None), default=np.inf)

    # rotation from two mirror lines 45 degrees apart
    square = normalize(gen_square(400))
    p1 = HoughPlane(np.array([1.0, 0.0]), 0.0)
    p2 = HoughPlane(np.array([np.sqrt(0.5), np.sqrt(0.5)]), 0.0)
    rot = compose_rotation(p1, p2)
    angle_ok = abs(abs(rot.angle) - np.pi / 2) < 1e-12
    mapped = PointCloud(square.points @ rot.matrix.T + rot.translation)
    cd = chamfer(mapped, square)

    ok = err < 0.02 and angle_ok and cd < 1e-12
    report(capsys, 10, ok,
           f"translation error {err:.4f} (<0.02); composed rotation "
           f"angle={np.degrees(rot.angle):.1f} deg, square chamfer {cd:.2e} (<1e-12)")


def test_criterion_11_dbscan_ablation(capsys):
    """Mean-shift trajectories clustered by DBSCAN must not beat the Langevin
    pipeline on the noisy square."""
    noise = 0.03
    rows = noisy_square_runs(noise)
    lang_f1 = float(np.mean([r[1] for r in rows]))
    base = normalize(gen_square(400))
    gt = GroundTruth(base.gt_symmetries)
    eps = max(0.02, 2.0 * noise)
    f1s = []
    for seed in range(5):
        cloud = rows[seed][4]
        space = build_reflective_space(cloud, num_pairs=2000, k=0.3, seed=seed)
        finals = full_meanshift_trajectories(space.samples, h=0.025)
        dcfg = default_extract_config(0.025, finals.shape[0], 2).dbscan
        labels = dbscan(finals, dcfg, metric="geodesic", k=0.3)
        cens = centroids([finals[idx] for idx in cluster_indices(labels)], k=0.3)
        res = modes_to_results(np.asarray(cens) if cens else np.empty((0, 2)),
                               cloud, eps)
        _, _, f1, _ = match_f1(res, gt, 0.1, GEO2)
        f1s.append(f1)
    abl_f1 = float(np.mean(f1s))
    ok = abl_f1 <= lang_f1
    report(capsys, 11, ok,
           f"3% noise F1: mean-shift+DBSCAN {abl_f1:.3f} vs Langevin "
           f"{lang_f1:.3f} (ablation must not win)")


def full_meanshift_trajectories(votes, h, iters=300, tol=1e-5):
    """Run every vote to its mean-shift fixed point (full neighborhood)."""
    X = votes.copy()
    for _ in range(iters):
        W = np.exp(-cdist(X, votes) ** 2 / h**2)
        new = (W @ votes) / W.sum(axis=1, keepdims=True)
        moved = np.linalg.norm(new - X, axis=1).max()
        X = new
        if moved < tol:
            break
    return X
