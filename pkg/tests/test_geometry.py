import math

import numpy as np
import pytest

from flava.errors import BehindCameraError
from flava.geometry import (
    Box3D,
    Calibration,
    Rect2D,
    bev_polygon,
    box_corners,
    convex_intersection_area,
    frustum_select,
    normalize_yaw,
    points_in_bev_footprint,
    points_in_box,
    project_point,
    project_points,
)

from conftest import random_box, random_calibration
from oracles import (
    box_corners_bev,
    points_in_oriented_box_2d,
    project_chain,
    raster_intersection_area,
)

FULL_IMAGE = Rect2D(-1e9, -1e9, 1e9, 1e9)


def pinhole(focal, cu, cv):
    p = np.array([[focal, 0.0, cu, 0.0], [0.0, focal, cv, 0.0], [0.0, 0.0, 1.0, 0.0]])
    return Calibration(p_rect=p, r_rect=np.eye(4), t_velo_cam=np.eye(4))


class TestNormalizeYaw:
    def test_range(self):
        for yaw in (-10.0, -math.pi, 0.0, math.pi, 3.5, 100.0):
            n = normalize_yaw(yaw)
            assert -math.pi <= n < math.pi

    def test_pi_maps_to_minus_pi(self):
        assert normalize_yaw(math.pi) == -math.pi

    def test_identity_inside_range(self):
        assert normalize_yaw(1.25) == 1.25


class TestBox3D:
    def test_rejects_degenerate_dims(self):
        with pytest.raises(ValueError):
            Box3D(0, 0, 0, 1e-4, 1, 1, 0)

    def test_rejects_negative_track(self):
        with pytest.raises(ValueError):
            Box3D(0, 0, 0, 1, 1, 1, 0, track_id=-1)

    def test_yaw_normalized_on_construction(self):
        box = Box3D(0, 0, 0, 1, 1, 1, yaw=2 * math.pi + 0.5)
        assert box.yaw == pytest.approx(0.5, abs=1e-12)


class TestProjectPoint:
    def test_identity_homogeneous_division(self):
        pt = project_point(Calibration.identity(), (2.0, 1.0, 10.0))
        assert pt == pytest.approx((0.2, 0.1, 10.0))

    def test_optical_axis_hits_principal_point(self):
        pt = project_point(pinhole(700.0, 600.0, 180.0), (0.0, 0.0, 10.0))
        assert pt == pytest.approx((600.0, 180.0, 10.0))

    def test_behind_camera_raises(self):
        with pytest.raises(BehindCameraError):
            project_point(Calibration.identity(), (0.0, 0.0, -5.0))
        with pytest.raises(BehindCameraError):
            project_point(Calibration.identity(), (0.0, 0.0, 0.0))

    def test_matches_chain_oracle_on_realistic_calib(self, realistic_calib):
        rng = np.random.default_rng(7)
        for _ in range(100):
            p = rng.uniform([-5, -20, -3], [60, 20, 5])
            expected = project_chain(realistic_calib.p_rect, realistic_calib.r_rect,
                                     realistic_calib.t_velo_cam, p)
            if expected[2] <= 1e-9:
                continue
            got = project_point(realistic_calib, p)
            assert got.u == pytest.approx(expected[0], abs=1e-6)
            assert got.v == pytest.approx(expected[1], abs=1e-6)
            assert got.depth == pytest.approx(expected[2], abs=1e-9)

    def test_matches_chain_oracle_on_random_calibs(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            calib = random_calibration(rng)
            p = rng.uniform(-20, 20, size=3)
            expected = project_chain(calib.p_rect, calib.r_rect, calib.t_velo_cam, p)
            if expected[2] <= 1e-9:
                continue
            got = project_point(calib, p)
            assert got.u == pytest.approx(expected[0], abs=1e-6)
            assert got.v == pytest.approx(expected[1], abs=1e-6)

    def test_batch_matches_scalar(self, realistic_calib):
        rng = np.random.default_rng(3)
        pts = rng.uniform([0, -10, -2], [40, 10, 2], size=(64, 3))
        uv, depth = project_points(realistic_calib, pts)
        for i in range(len(pts)):
            if depth[i] > 1e-9:
                single = project_point(realistic_calib, pts[i])
                assert uv[i, 0] == pytest.approx(single.u, abs=1e-9)
                assert uv[i, 1] == pytest.approx(single.v, abs=1e-9)


class TestRect2D:
    def test_rejects_inverted(self):
        with pytest.raises(ValueError):
            Rect2D(1.0, 0.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            Rect2D(0.0, 0.0, 0.0, 1.0)


class TestFrustumSelect:
    def test_whole_image_selects_all_forward(self):
        pts = np.array([[1, 0, 0], [5, 2, -1], [10, -3, 2]], dtype=float)
        sel = frustum_select(Calibration.identity(), pts, FULL_IMAGE)
        # identity camera looks along +z: forward means z > 0
        assert list(sel.indices) == [2]
        assert sel.depth_min == pytest.approx(2.0)
        assert sel.depth_max == pytest.approx(2.0)

    def test_all_behind_camera_empty(self):
        pts = np.array([[0, 0, -1], [1, 1, -5]], dtype=float)
        sel = frustum_select(Calibration.identity(), pts, FULL_IMAGE)
        assert sel.empty
        assert sel.depth_min is None and sel.depth_max is None

    def test_grid_cloud_matches_bruteforce(self):
        calib = Calibration.identity()
        xs = np.linspace(-1, 1, 11)
        grid = np.array([[x, y, z] for x in xs for y in xs for z in (1.0, 2.0, -1.0)])
        rect = Rect2D(0.1, 0.1, 0.3, 0.3)
        sel = frustum_select(calib, grid, rect)
        expected = []
        for i, p in enumerate(grid):
            if p[2] <= 1e-9:
                continue
            u, v = p[0] / p[2], p[1] / p[2]
            if 0.1 <= u <= 0.3 and 0.1 <= v <= 0.3:
                expected.append(i)
        assert list(sel.indices) == expected

    def test_partition_property(self, realistic_calib):
        rng = np.random.default_rng(23)
        for _ in range(20):
            pts = rng.uniform([-30, -30, -3], [30, 30, 3], size=(300, 3))
            sel = frustum_select(realistic_calib, pts, FULL_IMAGE)
            _, depth = project_points(realistic_calib, pts)
            behind = set(np.flatnonzero(depth <= 1e-9).tolist())
            assert behind.isdisjoint(sel.indices.tolist())
            assert behind | set(sel.indices.tolist()) == set(range(len(pts)))

    def test_boundary_inclusive(self):
        calib = pinhole(100.0, 0.0, 0.0)
        # u = 100 * x / z: x=1, z=10 -> u = 10 exactly on the rect edge
        pts = np.array([[1.0, 0.0, 10.0]])
        sel = frustum_select(calib, pts, Rect2D(10.0, -5.0, 20.0, 5.0))
        assert list(sel.indices) == [0]


class TestBoxCorners:
    def test_unit_cube_documented_order(self):
        corners = box_corners(Box3D(0, 0, 0, 1, 1, 1, 0))
        expected = np.array([
            [0.5, 0.5, -0.5], [-0.5, 0.5, -0.5], [-0.5, -0.5, -0.5], [0.5, -0.5, -0.5],
            [0.5, 0.5, 0.5], [-0.5, 0.5, 0.5], [-0.5, -0.5, 0.5], [0.5, -0.5, 0.5],
        ])
        assert np.allclose(corners, expected)

    def test_quarter_turn(self):
        corners = box_corners(Box3D(0, 0, 0, 2, 1, 1, math.pi / 2))
        # heading +x rotates onto +y: body (l/2, w/2) -> world (-w/2, l/2)
        assert corners[0, :2] == pytest.approx((-0.5, 1.0), abs=1e-12)

    def test_center_edges_orthogonality_random(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            box = random_box(rng)
            corners = box_corners(box)
            assert np.abs(corners.mean(axis=0) - box.center).max() < 1e-12
            length_edge = corners[0] - corners[1]
            width_edge = corners[1] - corners[2]
            height_edge = corners[4] - corners[0]
            assert np.linalg.norm(length_edge) == pytest.approx(box.length, abs=1e-9)
            assert np.linalg.norm(width_edge) == pytest.approx(box.width, abs=1e-9)
            assert np.linalg.norm(height_edge) == pytest.approx(box.height, abs=1e-9)
            assert abs(np.dot(length_edge, width_edge)) < 1e-9
            assert abs(np.dot(length_edge, height_edge)) < 1e-9


class TestBevPolygon:
    def test_unit_square_ccw(self):
        poly = bev_polygon(Box3D(0, 0, 0, 1, 1, 1, 0))
        assert np.allclose(poly, [[0.5, 0.5], [-0.5, 0.5], [-0.5, -0.5], [0.5, -0.5]])
        # shoelace area positive means CCW
        x, y = poly[:, 0], poly[:, 1]
        signed = 0.5 * (np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
        assert signed > 0

    def test_rotated_vertices_radius(self):
        box = Box3D(0, 0, 0, 2, 1, 1, math.pi / 4)
        poly = bev_polygon(box)
        radius = math.hypot(1.0, 0.5)
        assert np.allclose(np.hypot(poly[:, 0], poly[:, 1]), radius)

    def test_matches_first_principles_oracle(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            box = random_box(rng)
            expected = box_corners_bev(box.x, box.y, box.yaw, box.length, box.width)
            assert np.allclose(bev_polygon(box), expected, atol=1e-12)

    def test_area_property(self):
        rng = np.random.default_rng(19)
        for _ in range(50):
            box = random_box(rng)
            poly = bev_polygon(box)
            x, y = poly[:, 0], poly[:, 1]
            area = 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
            assert area == pytest.approx(box.length * box.width, abs=1e-9)


class TestPointMembership:
    def test_center_included_any_z(self):
        box = Box3D(1, 2, 0, 2, 1, 1, 0.3)
        pts = np.array([[1, 2, 100.0], [1, 2, -50.0]])
        assert list(points_in_bev_footprint(pts, box)) == [0, 1]

    def test_far_point_excluded(self):
        box = Box3D(0, 0, 0, 2, 1, 1, 0)
        assert len(points_in_bev_footprint(np.array([[20.0, 0, 0]]), box)) == 0

    def test_footprint_matches_unrotate_oracle(self):
        rng = np.random.default_rng(31)
        box = random_box(rng)
        pts = np.column_stack([
            rng.uniform(box.x - 8, box.x + 8, 1000),
            rng.uniform(box.y - 8, box.y + 8, 1000),
            rng.uniform(-3, 3, 1000),
        ])
        expected = points_in_oriented_box_2d(pts[:, :2], box.x, box.y, box.yaw,
                                             box.length, box.width)
        assert list(points_in_bev_footprint(pts, box)) == expected

    def test_points_in_box_vertical_bound(self):
        box = Box3D(0, 0, 0, 2, 2, 1, 0)
        pts = np.array([[0, 0, 0], [0, 0, 1.0], [0, 0, 0.5], [0, 0, -0.5]])
        inside = list(points_in_box(pts, box))
        assert 0 in inside
        assert 1 not in inside       # center_z + h above the roof
        assert 2 in inside           # exactly on the roof, boundary inclusive
        assert 3 in inside

    def test_points_in_box_matches_oracle(self):
        rng = np.random.default_rng(37)
        for _ in range(10):
            box = random_box(rng)
            pts = np.column_stack([
                rng.uniform(box.x - 6, box.x + 6, 500),
                rng.uniform(box.y - 6, box.y + 6, 500),
                rng.uniform(box.z - 3, box.z + 3, 500),
            ])
            footprint = points_in_oriented_box_2d(pts[:, :2], box.x, box.y, box.yaw,
                                                  box.length, box.width)
            expected = [i for i in footprint
                        if abs(pts[i, 2] - box.z) <= box.height / 2 + 1e-9]
            assert list(points_in_box(pts, box)) == expected


def square(cx=0.0, cy=0.0, half=0.5, yaw=0.0):
    return bev_polygon(Box3D(cx, cy, 0, 2 * half, 2 * half, 1, yaw))


class TestConvexIntersectionArea:
    def test_identical_unit_squares(self):
        assert convex_intersection_area(square(), square()) == pytest.approx(1.0, abs=1e-12)

    def test_half_overlap(self):
        assert convex_intersection_area(square(), square(cx=0.5)) == pytest.approx(0.5, abs=1e-12)

    def test_rotated_octagon(self):
        area = convex_intersection_area(square(), square(yaw=math.pi / 4))
        assert area == pytest.approx(2 * (math.sqrt(2) - 1), abs=1e-9)

    def test_disjoint_is_zero(self):
        assert convex_intersection_area(square(), square(cx=10.0)) == 0.0

    def test_touching_edge_is_zero_area(self):
        assert convex_intersection_area(square(), square(cx=1.0)) == pytest.approx(0.0, abs=1e-9)

    def test_symmetry_and_bounds(self):
        rng = np.random.default_rng(41)
        for _ in range(100):
            a = random_box(rng)
            b = a.moved(x=a.x + rng.uniform(-2, 2), y=a.y + rng.uniform(-2, 2),
                        yaw=rng.uniform(-math.pi, math.pi))
            pa, pb = bev_polygon(a), bev_polygon(b)
            ab = convex_intersection_area(pa, pb)
            ba = convex_intersection_area(pb, pa)
            assert abs(ab - ba) <= 1e-9
            assert -1e-12 <= ab <= min(a.bev_area, b.bev_area) + 1e-9

    def test_rigid_invariance(self):
        rng = np.random.default_rng(43)
        for _ in range(50):
            a = random_box(rng)
            b = a.moved(x=a.x + rng.uniform(-1, 1), y=a.y + rng.uniform(-1, 1),
                        yaw=rng.uniform(-math.pi, math.pi))
            base = convex_intersection_area(bev_polygon(a), bev_polygon(b))
            dyaw = rng.uniform(-math.pi, math.pi)
            dx, dy = rng.uniform(-50, 50, size=2)
            c, s = math.cos(dyaw), math.sin(dyaw)

            def rigid(box):
                nx = c * box.x - s * box.y + dx
                ny = s * box.x + c * box.y + dy
                return box.moved(x=nx, y=ny, yaw=normalize_yaw(box.yaw + dyaw))

            moved = convex_intersection_area(bev_polygon(rigid(a)), bev_polygon(rigid(b)))
            assert moved == pytest.approx(base, rel=1e-6, abs=1e-9)

    def test_matches_rasterization_oracle(self):
        rng = np.random.default_rng(47)
        for _ in range(25):
            a = random_box(rng)
            b = a.moved(
                x=a.x + rng.uniform(-a.length / 2, a.length / 2),
                y=a.y + rng.uniform(-a.width / 2, a.width / 2),
                yaw=rng.uniform(-math.pi, math.pi),
                length=max(0.5, a.length * rng.uniform(0.7, 1.3)),
                width=max(0.4, a.width * rng.uniform(0.7, 1.3)),
            )
            pa, pb = bev_polygon(a), bev_polygon(b)
            exact = convex_intersection_area(pa, pb)
            sampled = raster_intersection_area(pa, pb, resolution=1000)
            assert exact == pytest.approx(sampled, rel=1e-2, abs=5e-3)

    def test_containment_case(self):
        outer = square(half=2.0)
        inner = square(half=0.5, yaw=0.7)
        assert convex_intersection_area(inner, outer) == pytest.approx(1.0, abs=1e-9)
        assert convex_intersection_area(outer, inner) == pytest.approx(1.0, abs=1e-9)
