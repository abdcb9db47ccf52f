"""Tests for evaluation metrics: F1 matching, association, compression."""

import numpy as np
import pytest

from symseek.geodesic import GeodesicSpace, geodesic
from symseek.geometry import GeometryError, PointCloud, chamfer, normalize
from symseek.hough import HoughPlane, embed_plane
from symseek.metrics import (CompressedCloud, GroundTruth, association, compress,
                             decompress, match_f1, propose_ground_truth)
from symseek.shapes import gen_square


GEO = GeodesicSpace(0.3, 2)


def plane(nx, ny, l):
    return HoughPlane(np.array([nx, ny], float), l)


def test_ground_truth_validation_and_json():
    with pytest.raises(GeometryError):
        GroundTruth([], source="guessed")
    gt = GroundTruth([plane(1, 0, 0.2)], source="analytic")
    back = GroundTruth.from_json(gt.to_json())
    assert back.source == "analytic"
    assert np.allclose(back.symmetries[0].normal, [1, 0])
    assert back.symmetries[0].offset == 0.2


def test_match_f1_exact_hand_case():
    gt = GroundTruth([plane(1, 0, 0.0), plane(0, 1, 0.0)])
    pred = [plane(1, 0, 0.0)]
    p, r, f1, matches = match_f1(pred, gt, delta=0.05, geo=GEO)
    assert (p, r) == (1.0, 0.5)
    assert f1 == pytest.approx(2 / 3)
    assert matches == [(0, 0, 0.0)]


def test_match_f1_false_positive():
    gt = GroundTruth([plane(1, 0, 0.0)])
    pred = [plane(1, 0, 0.0), plane(0, 1, 0.9)]
    p, r, f1, _ = match_f1(pred, gt, delta=0.05, geo=GEO)
    assert (p, r, f1) == (0.5, 1.0, pytest.approx(2 / 3))


def test_match_f1_one_to_one_greedy():
    """Two predictions near one GT plane: only the closer one matches."""
    gt = GroundTruth([plane(1, 0, 0.0)])
    near = plane(np.cos(0.01), np.sin(0.01), 0.0)
    nearer = plane(1, 0, 0.001)
    p, r, f1, matches = match_f1([near, nearer], gt, delta=0.05, geo=GEO)
    assert (p, r) == (0.5, 1.0)
    assert matches[0][0] == 1  # the closer prediction takes the slot


def test_match_f1_distance_is_geodesic():
    gt = GroundTruth([plane(1, 0, 0.0)])
    shifted = plane(1, 0, 0.03)
    _, _, _, matches = match_f1([shifted], gt, delta=0.05, geo=GEO)
    e1 = embed_plane(plane(1, 0, 0.0), 0.3).embed
    e2 = embed_plane(shifted, 0.3).embed
    assert matches[0][2] == pytest.approx(geodesic(e1, e2, GEO))


def test_match_f1_empty_inputs():
    gt = GroundTruth([plane(1, 0, 0.0)])
    assert match_f1([], gt, 0.05, GEO)[:3] == (0.0, 0.0, 0.0)
    assert match_f1([plane(1, 0, 0)], GroundTruth([]), 0.05, GEO)[:3] == (0.0, 0.0, 0.0)
    with pytest.raises(GeometryError):
        match_f1([], gt, 0.0, GEO)


def test_association_perfect_axis():
    cloud = normalize(gen_square(400))
    assert association([plane(1, 0, 0.0)], cloud, 0.02) == pytest.approx(1.0)
    assert association([], cloud, 0.02) == 0.0


def test_association_averages_over_predictions():
    cloud = normalize(gen_square(400))
    good = plane(1, 0, 0.0)
    bad = plane(1, 0, 0.9)  # mirrors the square off itself
    a = association([good, bad], cloud, 0.02)
    assert 0.0 < a < 1.0


def test_compress_square_with_axes():
    cloud = normalize(gen_square(400))
    comp, ratio = compress(cloud, cloud.gt_symmetries, support_eps=0.02)
    assert ratio <= 0.30
    assert ratio == comp.ratio()
    assert comp.original_size == 400
    assert comp.points.shape[0] < 400
    # round trip: the reconstruction covers the original within support_eps
    rec = decompress(comp)
    assert chamfer(rec, cloud) <= 0.02


def test_compress_skips_useless_planes():
    cloud = normalize(gen_square(400))
    useless = plane(1, 0, 2.5)  # entirely off the shape, mirrors nothing
    comp, ratio = compress(cloud, [useless], support_eps=0.02)
    assert comp.planes == []
    assert ratio == pytest.approx(1.0)  # nothing removed, no plane stored


def test_compressed_cloud_json_round_trip():
    comp = CompressedCloud(np.array([[0.0, 1.0]]), [plane(1, 0, 0.5)], 0.02, 10)
    back = CompressedCloud.from_json(comp.to_json())
    assert back.original_size == 10
    assert np.allclose(back.points, comp.points)
    assert np.allclose(back.planes[0].normal, comp.planes[0].normal)
    assert back.planes[0].offset == comp.planes[0].offset
    assert back.ratio() == comp.ratio()


def test_compression_ratio_formula():
    # 3 points kept of 10, one plane, 2D: (3*2*8 + 1*4*8) / (10*2*8)
    comp = CompressedCloud(np.zeros((3, 2)), [plane(1, 0, 0.0)], 0.02, 10)
    assert comp.ratio() == pytest.approx((3 * 2 * 8 + 4 * 8) / (10 * 2 * 8))


def test_propose_ground_truth_square():
    cloud = normalize(gen_square(120))
    gt = propose_ground_truth(cloud, vote_threshold=0.5, support_eps=0.02,
                              max_pairs=7200, k=0.3)
    assert gt.source == "proposed"
    p, r, f1, _ = match_f1(gt.symmetries, GroundTruth(cloud.gt_symmetries), 0.05, GEO)
    assert r == 1.0  # all four axes proposed
    assert p >= 0.8


def test_propose_ground_truth_needs_points():
    with pytest.raises(GeometryError):
        propose_ground_truth(PointCloud(np.array([[0.0, 0.0]])))
