import math

import numpy as np
import pytest

from mono3d import (
    BevPolygon,
    Box3D,
    Quaternion,
    allo_to_ego,
    bev_polygon,
    corners,
    ego_to_allo,
    iou_2d,
    iou_3d,
    iou_bev,
    yaw_of,
)

from conftest import (
    corners_oracle,
    make_box2d,
    mc_iou_3d,
    mc_iou_bev,
    quat_matrix_oracle,
    random_quaternion,
    random_yaw_box,
    rodrigues_matrix,
    yaw_box,
)


class TestQuaternion:
    def test_normalize(self):
        q = Quaternion(2.0, 0.0, 0.0, 0.0).normalize()
        assert q == Quaternion(1.0, 0.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            Quaternion(0.0, 0.0, 0.0, 0.0).normalize()

    def test_matrix_matches_oracle(self, rng):
        for _ in range(300):
            q = random_quaternion(rng)
            assert np.allclose(q.rotation_matrix(), quat_matrix_oracle(q), atol=1e-12)

    def test_multiply_composes_rotations(self, rng):
        for _ in range(100):
            a, b = random_quaternion(rng), random_quaternion(rng)
            lhs = (a * b).rotation_matrix()
            rhs = a.rotation_matrix() @ b.rotation_matrix()
            assert np.allclose(lhs, rhs, atol=1e-12)

    def test_axis_angle_matches_rodrigues(self, rng):
        for _ in range(100):
            axis = rng.normal(size=3)
            angle = float(rng.uniform(-math.pi, math.pi))
            q = Quaternion.from_axis_angle(axis, angle)
            assert np.allclose(q.rotation_matrix(), rodrigues_matrix(axis, angle), atol=1e-12)


class TestOrientationConversion:
    def test_on_axis_ray_is_identity_conversion(self, rng):
        q = random_quaternion(rng)
        out = allo_to_ego(q, [0.0, 0.0, 1.0])
        assert np.allclose(
            [out.w, out.x, out.y, out.z], [q.w, q.x, q.y, q.z], atol=1e-12
        )

    def test_45_degree_ray_matches_matrix_oracle(self):
        # Oracle: the minimal rotation taking ez to the ray, built with
        # Rodrigues from axis = ez x ray and the angle between them.
        ray = np.array([1.0, 0.0, 1.0]) / math.sqrt(2)
        out = allo_to_ego(Quaternion.identity(), ray)
        axis = np.cross([0.0, 0.0, 1.0], ray)
        angle = math.acos(ray[2])
        expected = rodrigues_matrix(axis, angle)
        assert np.allclose(out.rotation_matrix(), expected, atol=1e-12)
        assert np.allclose(out.rotate([0.0, 0.0, 1.0]), ray, atol=1e-12)

    def test_roundtrip_random(self, rng):
        for _ in range(1000):
            q = random_quaternion(rng)
            ray = np.array(
                [rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(0.1, 20.0)]
            )
            back = ego_to_allo(allo_to_ego(q, ray), ray)
            assert back.geodesic_distance(q) < 1e-9

    def test_invalid_rays(self):
        with pytest.raises(ValueError):
            allo_to_ego(Quaternion.identity(), [0.0, 0.0, 0.0])
        with pytest.raises(ValueError):
            allo_to_ego(Quaternion.identity(), [1.0, 0.0, -1.0])


class TestCorners:
    def test_unit_cube(self):
        box = Box3D(center=(0, 0, 0), size=(1, 1, 1), orientation=Quaternion.identity())
        got = corners(box)
        expected = 0.5 * np.array(
            [
                [-1, -1, -1],
                [-1, -1, 1],
                [-1, 1, 1],
                [-1, 1, -1],
                [1, 1, -1],
                [1, 1, 1],
                [1, -1, 1],
                [1, -1, -1],
            ]
        )
        assert np.allclose(got, expected)

    def test_translation_equivariance(self, rng):
        box = random_yaw_box(rng)
        t = np.array([1.5, -2.0, 3.0])
        moved = Box3D(
            center=tuple(np.asarray(box.center) + t),
            size=box.size,
            orientation=box.orientation,
        )
        assert np.allclose(corners(moved), corners(box) + t, atol=1e-12)

    def test_yaw_90_swaps_extents(self):
        # Oracle: rotate the unrotated corners with the quaternion's matrix.
        box = yaw_box(0, 0, 0, 2, 1, 1, math.pi / 2)
        got = corners(box)
        unrotated = corners(Box3D(center=(0, 0, 0), size=(2, 1, 1), orientation=Quaternion.identity()))
        expected = unrotated @ quat_matrix_oracle(box.orientation).T
        assert np.allclose(got, expected, atol=1e-12)
        assert got[:, 0].max() - got[:, 0].min() == pytest.approx(1.0)
        assert got[:, 2].max() - got[:, 2].min() == pytest.approx(2.0)

    def test_centroid_and_edge_lengths(self, rng):
        for _ in range(50):
            box = random_yaw_box(rng)
            pts = corners(box)
            assert np.allclose(pts.mean(axis=0), box.center, atol=1e-9)
            # The 12 edges of the cyclic corner ordering: 4 of each extent.
            edges = []
            ring = [0, 1, 2, 3], [4, 5, 6, 7]
            for face in ring:
                for i in range(4):
                    edges.append(np.linalg.norm(pts[face[i]] - pts[face[(i + 1) % 4]]))
            for i in range(4):
                edges.append(np.linalg.norm(pts[i] - pts[7 - i]))
            w, h, d = box.size
            expected = sorted([h, d] * 2 + [h, d] * 2 + [w] * 4)
            assert np.allclose(sorted(edges), expected, atol=1e-9)

    def test_matches_corner_oracle(self, rng):
        for _ in range(200):
            box = random_yaw_box(rng)
            assert np.allclose(corners(box), corners_oracle(box), atol=1e-12)


class TestIou2D:
    def test_identical(self):
        b = make_box2d(0, 0, 2, 3)
        assert iou_2d(b, b) == 1.0

    def test_disjoint(self):
        assert iou_2d(make_box2d(0, 0, 1, 1), make_box2d(5, 5, 6, 6)) == 0.0

    def test_half_shifted_unit_squares(self):
        assert iou_2d(make_box2d(0, 0, 1, 1), make_box2d(0.5, 0, 1.5, 1)) == pytest.approx(1 / 3)

    def test_symmetric(self, rng):
        def sample():
            x1, x2 = np.sort(rng.uniform(0, 10, 2))
            y1, y2 = np.sort(rng.uniform(0, 10, 2))
            return make_box2d(x1, y1, x2, y2)

        for _ in range(100):
            a, b = sample(), sample()
            assert iou_2d(a, b) == iou_2d(b, a)
            assert 0.0 <= iou_2d(a, b) <= 1.0


class TestBevPolygon:
    def test_axis_aligned(self):
        poly = bev_polygon(yaw_box(0, 0, 0, 2, 1, 4, 0.0))
        xs, zs = poly.vertices[:, 0], poly.vertices[:, 1]
        assert xs.min() == pytest.approx(-1.0) and xs.max() == pytest.approx(1.0)
        assert zs.min() == pytest.approx(-2.0) and zs.max() == pytest.approx(2.0)
        assert poly.signed_area() == pytest.approx(8.0)

    def test_yaw_90(self):
        poly = bev_polygon(yaw_box(0, 0, 0, 2, 1, 4, math.pi / 2))
        xs, zs = poly.vertices[:, 0], poly.vertices[:, 1]
        assert xs.min() == pytest.approx(-2.0) and xs.max() == pytest.approx(2.0)
        assert zs.min() == pytest.approx(-1.0) and zs.max() == pytest.approx(1.0)

    def test_arbitrary_yaw_matches_2d_rotation_oracle(self, rng):
        for _ in range(100):
            box = random_yaw_box(rng)
            yaw = yaw_of(box)
            w, _, d = box.size
            base = np.array(
                [[w / 2, d / 2], [-w / 2, d / 2], [-w / 2, -d / 2], [w / 2, -d / 2]]
            )
            # Ground-plane action of a yaw rotation: R_y applied to (x, 0, z).
            rot3 = rodrigues_matrix([0, 1, 0], yaw)
            expected = np.column_stack(
                [
                    rot3[0, 0] * base[:, 0] + rot3[0, 2] * base[:, 1],
                    rot3[2, 0] * base[:, 0] + rot3[2, 2] * base[:, 1],
                ]
            ) + np.array([box.center[0], box.center[2]])
            assert np.allclose(bev_polygon(box).vertices, expected, atol=1e-9)

    def test_counterclockwise_required(self):
        with pytest.raises(ValueError):
            BevPolygon(vertices=np.array([[0, 0], [0, 1], [1, 1], [1, 0]], dtype=float))


class TestIouBev:
    def test_identical(self, rng):
        box = random_yaw_box(rng)
        assert iou_bev(box, box) == pytest.approx(1.0, abs=1e-12)

    def test_far_apart(self):
        a = yaw_box(0, 0, 10, 2, 1, 2, 0.3)
        b = yaw_box(100, 0, 10, 2, 1, 2, 0.3)
        assert iou_bev(a, b) == 0.0

    def test_axis_aligned_equals_rect_iou(self, rng):
        for _ in range(100):
            a = yaw_box(*rng.uniform(-3, 3, 2), 10, *rng.uniform(0.5, 4, 3), 0.0)
            b = yaw_box(*rng.uniform(-3, 3, 2), 10, *rng.uniform(0.5, 4, 3), 0.0)
            ra = make_box2d(
                a.center[0] - a.size[0] / 2,
                a.center[2] - a.size[2] / 2,
                a.center[0] + a.size[0] / 2,
                a.center[2] + a.size[2] / 2,
            )
            rb = make_box2d(
                b.center[0] - b.size[0] / 2,
                b.center[2] - b.size[2] / 2,
                b.center[0] + b.size[0] / 2,
                b.center[2] + b.size[2] / 2,
            )
            assert iou_bev(a, b) == pytest.approx(iou_2d(ra, rb), abs=1e-12)

    def test_against_monte_carlo(self, rng):
        for _ in range(15):
            a = random_yaw_box(rng, spread=2.0)
            b = random_yaw_box(rng, spread=2.0)
            approx = mc_iou_bev(a, b, rng, samples=400_000)
            assert iou_bev(a, b) == pytest.approx(approx, abs=1e-2)

    def test_symmetry(self, rng):
        for _ in range(50):
            a, b = random_yaw_box(rng), random_yaw_box(rng)
            assert iou_bev(a, b) == pytest.approx(iou_bev(b, a), abs=1e-12)

    def test_contained_box(self):
        outer = yaw_box(0, 0, 10, 4, 1, 6, 0.0)
        inner = yaw_box(0.2, 0, 10.1, 1, 1, 2, 1.1)  # rotated, fully inside
        assert iou_bev(outer, inner) == pytest.approx(2.0 / 24.0, rel=1e-9)

    def test_edge_touching_boxes(self):
        a = yaw_box(0, 0, 10, 2, 1, 2, 0.0)
        b = yaw_box(2, 0, 10, 2, 1, 2, 0.0)  # shares the x = 1 edge exactly
        assert iou_bev(a, b) == 0.0

    def test_diamond_in_square(self):
        # 45-degree square of diagonal 2 inside a unit-centered 2x2 square:
        # the diamond (area 2) is fully contained, IoU = 2 / 4.
        square = yaw_box(0, 0, 10, 2, 1, 2, 0.0)
        diamond = yaw_box(0, 0, 10, math.sqrt(2), 1, math.sqrt(2), math.pi / 4)
        assert iou_bev(square, diamond) == pytest.approx(0.5, rel=1e-9)


class TestIou3D:
    def test_identical(self, rng):
        box = random_yaw_box(rng)
        assert iou_3d(box, box) == pytest.approx(1.0, abs=1e-12)

    def test_vertical_offset_unit_cubes(self):
        a = yaw_box(0, 0.0, 10, 1, 1, 1, 0.0)
        b = yaw_box(0, 0.5, 10, 1, 1, 1, 0.0)
        assert iou_3d(a, b) == pytest.approx(1 / 3)

    def test_against_monte_carlo(self, rng):
        for _ in range(10):
            a = random_yaw_box(rng, spread=1.5)
            b = random_yaw_box(rng, spread=1.5)
            approx = mc_iou_3d(a, b, rng, samples=400_000)
            assert iou_3d(a, b) == pytest.approx(approx, abs=1e-2)

    def test_no_vertical_overlap(self):
        a = yaw_box(0, 0, 10, 1, 1, 1, 0.2)
        b = yaw_box(0, 5, 10, 1, 1, 1, 0.2)
        assert iou_3d(a, b) == 0.0
