"""Command-line frontend for the symmetry detection pipeline."""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .apps import SymmetrizeConfig, sequential_compress, symmetrize
from .extraction import (ExtractConfig, DbscanConfig, SymmetryResult, compute_support,
                         default_extract_config, extract)
from .geodesic import GeodesicSpace
from .geometry import GeometryError, PointCloud, normalize, add_noise
from .hough import (HoughPlane, TransformSample, TransformSpace, build_reflective_space,
                    build_translation_space, decode_sample)
from .io import ParseError, load_cloud, save_cloud
from .langevin import LangevinConfig, default_config, run_langevin
from .meanshift import MeanShiftConfig, mean_shift
from .metrics import EvalReport, GroundTruth, association, match_f1
from .render import render_shape_2d, render_shape_3d, render_trajectories, render_transform_space
from .shapes import gen_shape

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(args, timings: dict, outputs: list, input_path: str | None):
    out_dir = os.path.dirname(os.path.abspath(outputs[0])) if outputs else "."
    manifest = {
        "tool": "symseek",
        "version": __version__,
        "command": args.command,
        "config": {k: v for k, v in vars(args).items() if k != "func"},
        "seed": getattr(args, "seed", None),
        "timings_s": timings,
        "input_sha256": _sha256(input_path) if input_path else None,
        "outputs": [os.path.abspath(p) for p in outputs],
    }
    with open(os.path.join(out_dir, "run.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, default=str)


def _results_to_json(results, kind: str) -> str:
    return json.dumps({"kind": kind, "symmetries": [r.to_dict() for r in results]},
                      indent=2)


def _results_from_json(path: str):
    with open(path) as fh:
        obj = json.load(fh)
    out = []
    for s in obj.get("symmetries", []):
        res = SymmetryResult(s["kind"],
                             significance=s.get("significance", 0.0),
                             raw_significance=s.get("raw_significance", 0.0),
                             cluster_size=s.get("cluster_size", 0))
        if "normal" in s:
            res.plane = HoughPlane(np.asarray(s["normal"], float), float(s["offset"]))
        if "translation" in s:
            res.translation = np.asarray(s["translation"], float)
        out.append(res)
    return out


def _gt_from_file(path: str) -> GroundTruth:
    with open(path) as fh:
        obj = json.load(fh)
    key = "symmetries" if "symmetries" in obj else "gt_symmetries"
    syms = obj.get(key) or []
    planes = [HoughPlane(np.asarray(s["normal"], float), float(s["offset"])) for s in syms]
    return GroundTruth(planes, obj.get("source", "analytic"))


def cmd_gen(args) -> int:
    t0 = time.perf_counter()
    cloud = gen_shape(args.kind, num_points=args.points)
    cloud = normalize(cloud)
    if args.noise > 0:
        cloud = add_noise(cloud, args.noise, mode=args.noise_mode, seed=args.seed)
    save_cloud(cloud, args.out, fmt="json")
    _write_manifest(args, {"gen": time.perf_counter() - t0}, [args.out], None)
    return EXIT_OK


def _langevin_config(args, dim: int) -> LangevinConfig:
    if args.steps < 1:
        raise UsageError("steps must be >= 1")
    cfg = default_config(dim, total_steps=args.steps, num_walkers=args.walkers,
                         seed=args.seed)
    overrides = {}
    if args.kernel is not None:
        overrides["kernel_size"] = args.kernel
    if args.k is not None:
        overrides["k"] = args.k
    if args.step_size is not None:
        overrides["step_size"] = args.step_size
    if args.sigma_max is not None:
        overrides["sigma_max"] = args.sigma_max
    if args.levels is not None:
        overrides["num_levels"] = args.levels
        overrides["steps_per_level"] = max(1, args.steps // args.levels)
    if args.beta is not None:
        overrides["beta"] = args.beta
    if args.votes_per_step is not None:
        overrides["votes_per_step"] = args.votes_per_step
    if args.trace_every:
        overrides["trace_every"] = args.trace_every
    if overrides:
        base = {f: getattr(cfg, f) for f in cfg.__dataclass_fields__}
        base.update(overrides)
        cfg = LangevinConfig(**base)
    return cfg


def _extract_cfg(args, kernel: float, walkers: int, dim: int) -> ExtractConfig:
    cfg = default_extract_config(kernel, walkers, dim)
    dbs = cfg.dbscan
    return ExtractConfig(
        dbscan=DbscanConfig(eps=args.dbscan_eps or dbs.eps, min_pts=dbs.min_pts),
        support_eps=args.support_eps or cfg.support_eps,
        tau=args.tau,
        refine_coeff=cfg.refine_coeff,
        kernel_size=cfg.kernel_size)


def cmd_detect(args) -> int:
    timings = {}
    t0 = time.perf_counter()
    cloud = normalize(load_cloud(args.input, dim=args.dim))
    timings["load"] = time.perf_counter() - t0

    cfg = _langevin_config(args, cloud.dim)
    t0 = time.perf_counter()
    if args.kind == "reflective":
        space = build_reflective_space(cloud, num_pairs=args.pairs, k=cfg.k, seed=args.seed)
        geo = GeodesicSpace(cfg.k, cloud.dim)
    else:
        space = build_translation_space(cloud, num_pairs=args.pairs, seed=args.seed)
        geo = GeodesicSpace(0.0, cloud.dim, mode="euclidean")
    timings["votes"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    trace = run_langevin(space, geo, cfg)
    timings["langevin"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    results = extract(trace, space, cloud, _extract_cfg(args, cfg.kernel_size,
                                                        cfg.num_walkers, cloud.dim))
    timings["extract"] = time.perf_counter() - t0

    with open(args.out, "w") as fh:
        fh.write(_results_to_json(results, args.kind))
    outputs = [args.out]
    if args.trace_every:
        trace_path = os.path.splitext(args.out)[0] + ".trace.jsonl"
        with open(trace_path, "w") as fh:
            fh.write(trace.to_json_lines())
        outputs.append(trace_path)
    _write_manifest(args, timings, outputs, args.input)
    return EXIT_OK


def cmd_baseline(args) -> int:
    timings = {}
    t0 = time.perf_counter()
    cloud = normalize(load_cloud(args.input, dim=args.dim))
    k = args.k if args.k is not None else (0.3 if cloud.dim == 2 else 0.5)
    space = build_reflective_space(cloud, num_pairs=args.pairs, k=k, seed=args.seed)
    timings["votes"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    bw = args.bandwidth if args.bandwidth is not None else (0.025 if cloud.dim == 2 else 0.08)
    modes = mean_shift(space, MeanShiftConfig(bandwidth=bw))
    timings["meanshift"] = time.perf_counter() - t0

    support_eps = args.support_eps or (0.02 if cloud.dim == 2 else 0.05)
    results = []
    for m in modes:
        if np.linalg.norm(m) < k:
            m = m * (k / max(np.linalg.norm(m), 1e-12))
        plane = decode_sample(TransformSample(m, k))
        info = compute_support(plane, cloud, support_eps)
        if info.significance > args.tau:
            results.append(SymmetryResult("reflective", plane=plane,
                                          support=info.component,
                                          significance=info.significance,
                                          raw_support=info.raw,
                                          raw_significance=info.raw_significance))
    results.sort(key=lambda r: -r.significance)
    with open(args.out, "w") as fh:
        fh.write(_results_to_json(results, "reflective"))
    _write_manifest(args, timings, [args.out], args.input)
    return EXIT_OK


def cmd_eval(args) -> int:
    t0 = time.perf_counter()
    pred = _results_from_json(args.pred)
    gt = _gt_from_file(args.gt)
    k = args.k if args.k is not None else 0.3
    geo = GeodesicSpace(k, gt.symmetries[0].dim if gt.symmetries else 2)
    reflective = [r for r in pred if r.kind == "reflective"]
    p, r, f1, matches = match_f1(reflective, gt, args.delta, geo)
    report = EvalReport(p, r, f1, matches=matches)
    if args.input:
        cloud = normalize(load_cloud(args.input))
        eps = args.support_eps or (0.02 if cloud.dim == 2 else 0.05)
        report.association = association(pred, cloud, eps)
    with open(args.out, "w") as fh:
        fh.write(report.to_json())
    _write_manifest(args, {"eval": time.perf_counter() - t0}, [args.out], args.pred)
    print(f"precision={p:.3f} recall={r:.3f} f1={f1:.3f}")
    return EXIT_OK


def cmd_symmetrize(args) -> int:
    t0 = time.perf_counter()
    cloud = normalize(load_cloud(args.input))
    results = _results_from_json(args.results)
    planes = [r.plane for r in results if r.plane is not None]
    if not planes:
        raise UsageError("no reflective symmetries in results file")
    if not (0 <= args.plane_index < len(planes)):
        raise UsageError("plane index out of range")
    eps = args.support_eps or (0.02 if cloud.dim == 2 else 0.05)
    out = symmetrize(cloud, planes[args.plane_index],
                     SymmetrizeConfig(blend=args.blend, iterations=args.iterations,
                                      support_eps=eps))
    save_cloud(out, args.out, fmt="json")
    _write_manifest(args, {"symmetrize": time.perf_counter() - t0}, [args.out], args.input)
    return EXIT_OK


def cmd_compress(args) -> int:
    t0 = time.perf_counter()
    cloud = normalize(load_cloud(args.input))
    results = _results_from_json(args.results)
    eps = args.support_eps or (0.02 if cloud.dim == 2 else 0.05)
    comp, ratio, stages = sequential_compress(cloud, [r for r in results if r.plane is not None],
                                              support_eps=eps)
    with open(args.out, "w") as fh:
        fh.write(comp.to_json())
    stage_path = os.path.splitext(args.out)[0] + ".stages.json"
    with open(stage_path, "w") as fh:
        json.dump({"counts": [int(s.shape[0]) for s in stages], "ratio": ratio}, fh)
    _write_manifest(args, {"compress": time.perf_counter() - t0}, [args.out, stage_path],
                    args.input)
    print(f"ratio={ratio:.3f} planes={len(comp.planes)}")
    return EXIT_OK


def cmd_render(args) -> int:
    t0 = time.perf_counter()
    cloud = normalize(load_cloud(args.input))
    planes = []
    if args.results:
        planes = [r.plane for r in _results_from_json(args.results) if r.plane is not None]
    if args.space:
        space = TransformSpace.from_json(open(args.space).read())
        svg = render_transform_space(space.samples, space.k)
    elif cloud.dim == 2:
        svg = render_shape_2d(cloud, planes)
    else:
        svg = render_shape_3d(cloud, planes)
    with open(args.out, "w") as fh:
        fh.write(svg)
    _write_manifest(args, {"render": time.perf_counter() - t0}, [args.out], args.input)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="symseek",
        description="Partial symmetry detection in point clouds via annealed "
                    "Langevin dynamics on a transformation vote space.")
    ap.add_argument("--version", action="version", version=f"symseek {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, io_in=True):
        if io_in:
            p.add_argument("-i", "--input", required=True, help="input cloud file")
        p.add_argument("-o", "--out", required=True, help="output path")
        p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
        p.add_argument("--threads", type=int, default=os.cpu_count(),
                       help="worker pool cap (default: logical cores)")

    g = sub.add_parser("gen", help="generate a synthetic shape with ground truth")
    g.add_argument("--kind", required=True,
                   choices=["square", "regular_ngon", "letter_like", "cube",
                            "cylinder", "composite"])
    g.add_argument("--points", type=int, default=400)
    g.add_argument("--noise", type=float, default=0.0)
    g.add_argument("--noise-mode", default="isotropic",
                   choices=["isotropic", "along_normal"])
    common(g, io_in=False)
    g.set_defaults(func=cmd_gen)

    def detect_flags(p):
        p.add_argument("--dim", type=int, choices=[2, 3], default=None)
        p.add_argument("--pairs", type=int, default=50_000,
                       help="transformation votes to sample (default 50000)")
        p.add_argument("--k", type=float, default=None,
                       help="invalid-ball radius (default 0.3 in 2D, 0.5 in 3D)")
        p.add_argument("--support-eps", type=float, default=None,
                       help="association radius (default 0.02 in 2D, 0.05 in 3D)")
        p.add_argument("--tau", type=float, default=0.1,
                       help="significance threshold (default 0.1)")

    d = sub.add_parser("detect", help="full Langevin detection pipeline")
    d.add_argument("--kind", default="reflective", choices=["reflective", "translational"])
    detect_flags(d)
    d.add_argument("--walkers", type=int, default=200, help="Langevin walkers (default 200)")
    d.add_argument("--steps", type=int, default=50_000, help="total steps (default 50000)")
    d.add_argument("--kernel", type=float, default=None,
                   help="final noise scale (default 0.025 in 2D, 0.08 in 3D)")
    d.add_argument("--step-size", type=float, default=None,
                   help="step size alpha (default 0.06 in 2D, 0.02 in 3D)")
    d.add_argument("--sigma-max", type=float, default=None,
                   help="initial noise scale (default 0.5)")
    d.add_argument("--levels", type=int, default=None, help="annealing levels (default 10)")
    d.add_argument("--beta", type=float, default=None,
                   help="noise multiplier (default 0.55 in 2D, 0.2 in 3D)")
    d.add_argument("--votes-per-step", type=int, default=None,
                   help="votes sampled per step, 0 = all (default 512)")
    d.add_argument("--trace-every", type=int, default=0,
                   help="record walker snapshots every N steps (default off)")
    d.add_argument("--dbscan-eps", type=float, default=None,
                   help="mode clustering radius (default 2x kernel)")
    common(d)
    d.set_defaults(func=cmd_detect)

    b = sub.add_parser("baseline", help="mean-shift baseline pipeline")
    detect_flags(b)
    b.add_argument("--bandwidth", type=float, default=None,
                   help="mean-shift bandwidth (default: the 2D/3D kernel size)")
    common(b)
    b.set_defaults(func=cmd_baseline)

    e = sub.add_parser("eval", help="score predictions against ground truth")
    e.add_argument("-p", "--pred", required=True, help="detection results JSON")
    e.add_argument("-g", "--gt", required=True, help="ground truth (or cloud) JSON")
    e.add_argument("--delta", type=float, default=0.1,
                   help="match radius in geodesic distance (default 0.1)")
    e.add_argument("--k", type=float, default=None)
    e.add_argument("--support-eps", type=float, default=None)
    e.add_argument("-i", "--input", default=None,
                   help="cloud file; enables the association measure")
    e.add_argument("-o", "--out", required=True)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--threads", type=int, default=os.cpu_count())
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("symmetrize", help="snap a noisy shape onto a detected plane")
    s.add_argument("--results", required=True, help="detection results JSON")
    s.add_argument("--plane-index", type=int, default=0,
                   help="which detected plane to use (default 0, most significant)")
    s.add_argument("--blend", type=float, default=1.0)
    s.add_argument("--iterations", type=int, default=3)
    s.add_argument("--support-eps", type=float, default=None)
    common(s)
    s.set_defaults(func=cmd_symmetrize)

    c = sub.add_parser("compress", help="sequential compression with detected planes")
    c.add_argument("--results", required=True, help="detection results JSON")
    c.add_argument("--support-eps", type=float, default=None)
    common(c)
    c.set_defaults(func=cmd_compress)

    r = sub.add_parser("render", help="SVG of a shape, its symmetries, or a vote space")
    r.add_argument("--results", default=None, help="detection results JSON (optional)")
    r.add_argument("--space", default=None, help="transform space JSON (optional)")
    common(r)
    r.set_defaults(func=cmd_render)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, OSError) as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (GeometryError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
