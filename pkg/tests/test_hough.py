"""Tests for plane parameterization, vote spaces, and the embedding."""

import numpy as np
import pytest

from symseek.geometry import GeometryError, PointCloud
from symseek.hough import (HoughPlane, TransformSample, TransformSpace,
                           build_reflective_space, build_translation_space,
                           compose_rotation, decode_sample, embed_plane, pair_to_plane)
from symseek.shapes import gen_square


def unit(v):
    v = np.asarray(v, float)
    return v / np.linalg.norm(v)


def test_plane_canonical_negative_offset():
    p = HoughPlane(unit([-1.0, 0.0]), -0.5)
    assert p.offset == 0.5
    assert np.allclose(p.normal, [1.0, 0.0])


def test_plane_canonical_zero_offset_sign():
    p = HoughPlane(unit([-0.0, -1.0]), 0.0)
    # first nonzero coordinate of the normal is made positive at l = 0
    assert p.normal[1] == 1.0


def test_plane_rejects_non_unit_normal():
    with pytest.raises(GeometryError):
        HoughPlane(np.array([1.0, 1.0]), 0.2)


def test_pair_to_plane_swaps_endpoints():
    rng = np.random.default_rng(0)
    for _ in range(50):
        p, q = rng.standard_normal(3), rng.standard_normal(3)
        plane = pair_to_plane(p, q)
        from symseek.geometry import reflect_point
        assert np.allclose(reflect_point(p, plane), q, atol=1e-12)
        assert np.allclose(reflect_point(q, plane), p, atol=1e-12)


def test_pair_to_plane_hand_case():
    plane = pair_to_plane([1.0, 0.0], [-1.0, 0.0])
    assert np.allclose(plane.normal, [1.0, 0.0])
    assert plane.offset == 0.0


def test_pair_to_plane_degenerate():
    with pytest.raises(GeometryError):
        pair_to_plane([1.0, 2.0], [1.0, 2.0])


def test_embed_decode_roundtrip_many():
    """decode(embed(p)) == p and embed(decode(x)) == x to 1e-12."""
    rng = np.random.default_rng(1)
    k = 0.3
    for _ in range(2000):
        n = unit(rng.standard_normal(2))
        l = rng.uniform(0.0, 1.5)
        plane = HoughPlane(n, l)
        out = decode_sample(embed_plane(plane, k))
        assert np.abs(out.normal - plane.normal).max() < 1e-12
        assert abs(out.offset - plane.offset) < 1e-12
    for _ in range(2000):
        x = rng.standard_normal(3)
        x = x / np.linalg.norm(x) * rng.uniform(0.5, 2.0)
        back = embed_plane(decode_sample(TransformSample(x, 0.5)), 0.5).embed
        assert np.abs(back - x).max() < 1e-12


def test_sample_inside_ball_rejected():
    with pytest.raises(GeometryError):
        TransformSample(np.array([0.1, 0.0]), 0.3)


def test_transform_space_json_roundtrip():
    cloud = PointCloud(np.random.default_rng(2).random((40, 2)))
    space = build_reflective_space(cloud, num_pairs=100, k=0.3, seed=0)
    back = TransformSpace.from_json(space.to_json())
    assert back.kind == "reflective"
    assert back.k == space.k
    assert np.allclose(back.samples, space.samples)


def test_reflective_space_votes_outside_ball():
    cloud = PointCloud(np.random.default_rng(3).random((100, 2)) * 2 - 1)
    space = build_reflective_space(cloud, num_pairs=500, k=0.3, seed=1)
    assert space.samples.shape == (500, 2)
    assert np.linalg.norm(space.samples, axis=1).min() >= 0.3 - 1e-12


def test_reflective_space_symmetric_pair_vote():
    """A pair mirrored across a known axis votes exactly for that axis."""
    pts = np.array([[0.4, 0.7], [-0.4, 0.7], [0.0, 0.0]])
    space = build_reflective_space(PointCloud(pts), num_pairs=400, k=0.3, seed=0)
    # the (0, 1) pair encodes the x = 0 axis: embed = (0.3, 0) up to sign
    d = np.linalg.norm(space.samples - np.array([0.3, 0.0]), axis=1)
    assert d.min() < 1e-12


def test_translation_space_is_displacements():
    pts = np.array([[0.0, 0.0], [1.0, 2.0]])
    space = build_translation_space(PointCloud(pts), num_pairs=200, seed=0)
    assert space.kind == "translational"
    ok = (np.allclose(space.samples, [1.0, 2.0], atol=0) |
          np.allclose(space.samples, [-1.0, -2.0], atol=0))
    for v in space.samples:
        assert np.allclose(np.abs(v), [1.0, 2.0])


def test_compose_rotation_2d_perpendicular_lines():
    """Two perpendicular mirror lines through a point compose to a half turn."""
    p1 = HoughPlane(unit([1.0, 0.0]), 0.0)
    p2 = HoughPlane(unit([0.0, 1.0]), 0.0)
    rot = compose_rotation(p1, p2)
    assert abs(abs(rot.angle) - np.pi) < 1e-12
    assert np.allclose(rot.center, [0.0, 0.0], atol=1e-12)
    assert np.allclose(rot.apply([1.0, 2.0]), [-1.0, -2.0], atol=1e-12)


def test_compose_rotation_45_degree_lines_give_quarter_turn():
    p1 = HoughPlane(unit([1.0, 0.0]), 0.0)
    p2 = HoughPlane(unit([np.cos(3 * np.pi / 4), np.sin(3 * np.pi / 4)]), 0.0)
    rot = compose_rotation(p1, p2)
    assert abs(abs(rot.angle) - np.pi / 2) < 1e-12


def test_compose_rotation_3d_axis():
    p1 = HoughPlane(unit([1.0, 0.0, 0.0]), 0.0)
    p2 = HoughPlane(unit([1.0, 1.0, 0.0]), 0.0)
    rot = compose_rotation(p1, p2)
    assert np.allclose(np.abs(rot.axis), [0.0, 0.0, 1.0], atol=1e-12)
    assert abs(rot.angle - np.pi / 2) < 1e-9
    # rotating about z by 90 degrees
    assert np.allclose(rot.apply([1.0, 0.0, 0.0]), [0.0, 1.0, 0.0], atol=1e-9)


def test_compose_rotation_parallel_planes_error():
    p1 = HoughPlane(unit([1.0, 0.0]), 0.0)
    p2 = HoughPlane(unit([1.0, 0.0]), 0.7)
    with pytest.raises(GeometryError):
        compose_rotation(p1, p2)


def test_compose_rotation_maps_square_to_itself():
    """45-degree-separated axes of a square give a 90-degree self-map."""
    cloud = gen_square(200)
    p1 = HoughPlane(unit([1.0, 0.0]), 0.0)
    p2 = HoughPlane(unit([np.cos(np.pi / 4 + np.pi / 2), np.sin(np.pi / 4 + np.pi / 2)]), 0.0)
    rot = compose_rotation(p1, p2)
    rotated = rot.apply(cloud.points)
    from symseek.geometry import chamfer
    assert chamfer(PointCloud(rotated), cloud) < 1e-12
