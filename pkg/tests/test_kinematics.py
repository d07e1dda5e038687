"""Tests for the DH chain, frame composition, and polyline construction."""

import math

import numpy as np
import pytest

from armprox.kinematics import (
    DH_TABLE,
    NUM_FRAMES,
    REACH_BOUND,
    ArmPolyline,
    DhRow,
    HomTransform,
    control_points,
    dh_table,
    ee_transform,
    forward_frames,
    link_transform,
    load_dh_table,
    relative_base_transform,
)

# Golden fixture: zero-configuration tool-tip position, computed beforehand
# by an independent explicit-loop 4x4 composition script.
ZERO_CONFIG_TIP = np.array([0.0, -0.0246, 1.1258])
ZERO_CONFIG_JOINT7 = np.array([0.0, -0.0246, 1.1873])


def random_rotation(rng) -> np.ndarray:
    """Uniform random rotation from a normalized quaternion."""
    w, x, y, z = rng.normal(size=4)
    n = math.sqrt(w * w + x * x + y * y + z * z)
    w, x, y, z = w / n, x / n, y / n, z / n
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def random_rigid(rng) -> HomTransform:
    return HomTransform(random_rotation(rng), rng.uniform(-1, 1, 3))


class TestDhTable:
    def test_has_eight_rows(self):
        assert len(dh_table()) == 8

    def test_base_row(self):
        row = dh_table()[0]
        assert (row.alpha, row.a, row.d, row.theta_offset) == (math.pi, 0.0, 0.0, 0.0)

    def test_row_one(self):
        row = dh_table()[1]
        assert (row.alpha, row.a, row.d, row.theta_offset) == (math.pi / 2, 0.0, -0.2848, 0.0)

    def test_row_three(self):
        row = dh_table()[3]
        assert (row.alpha, row.a, row.d, row.theta_offset) == (math.pi / 2, 0.0, -0.4208, math.pi)

    def test_rows_two_to_seven_carry_pi_offsets(self):
        for row in dh_table()[2:]:
            assert row.theta_offset == math.pi

    def test_row_validation(self):
        with pytest.raises(ValueError):
            DhRow(alpha=7.0, a=0.0, d=0.0, theta_offset=0.0)
        with pytest.raises(ValueError):
            DhRow(alpha=0.0, a=float("nan"), d=0.0, theta_offset=0.0)
        with pytest.raises(ValueError):
            DhRow(alpha=0.0, a=0.0, d=0.0, theta_offset=-7.0)


class TestLoadDhTable:
    def test_round_trip_matches_builtin(self, tmp_path):
        path = tmp_path / "dh.txt"
        lines = ["# alpha a d theta_offset"]
        lines += [f"{r.alpha!r}, {r.a!r}, {r.d!r}, {r.theta_offset!r}" for r in DH_TABLE]
        path.write_text("\n".join(lines) + "\n")
        assert load_dh_table(path) == DH_TABLE

    def test_whitespace_separated(self, tmp_path):
        path = tmp_path / "dh.txt"
        path.write_text("\n".join(f"{r.alpha!r} {r.a!r} {r.d!r} {r.theta_offset!r}" for r in DH_TABLE))
        assert load_dh_table(path) == DH_TABLE

    def test_wrong_row_count(self, tmp_path):
        path = tmp_path / "dh.txt"
        path.write_text("0 0 0 0\n")
        with pytest.raises(ValueError, match="8 DH rows"):
            load_dh_table(path)

    def test_wrong_value_count(self, tmp_path):
        path = tmp_path / "dh.txt"
        path.write_text("0 0 0\n" * 8)
        with pytest.raises(ValueError, match="line 1"):
            load_dh_table(path)


class TestLinkTransform:
    def test_row_one_at_zero(self):
        t = link_transform(DH_TABLE[1], 0.0)
        np.testing.assert_allclose(t.r, [[1, 0, 0], [0, 0, -1], [0, 1, 0]], atol=1e-15)
        np.testing.assert_allclose(t.p, [0, 0, -0.2848], atol=1e-15)

    def test_all_zero_row_is_identity(self):
        t = link_transform(DhRow(0.0, 0.0, 0.0, 0.0), 0.0)
        np.testing.assert_array_equal(t.r, np.eye(3))
        np.testing.assert_array_equal(t.p, np.zeros(3))

    def test_row_one_at_quarter_turn(self):
        # frozen from an independent numeric evaluation of the link matrix
        t = link_transform(DH_TABLE[1], math.pi / 2)
        np.testing.assert_allclose(t.r, [[0, 0, 1], [1, 0, 0], [0, 1, 0]], atol=1e-15)
        np.testing.assert_allclose(t.p, [0, 0, -0.2848], atol=1e-15)

    def test_theta_offset_applied(self):
        row = DH_TABLE[2]
        np.testing.assert_array_equal(
            link_transform(row, 0.3).as_matrix(),
            link_transform(DhRow(row.alpha, row.a, row.d, 0.0), 0.3 + math.pi).as_matrix(),
        )

    def test_non_finite_angle_rejected(self):
        with pytest.raises(ValueError):
            link_transform(DH_TABLE[1], float("inf"))


class TestEeTransform:
    def test_constant_matrix(self):
        t = ee_transform()
        np.testing.assert_array_equal(t.r, np.diag([1.0, -1.0, -1.0]))
        np.testing.assert_array_equal(t.p, [0.0, 0.0, -0.0615])

    def test_applied_twice_rotation_cancels(self):
        t = ee_transform()
        tt = t @ t
        np.testing.assert_allclose(tt.r, np.eye(3), atol=1e-15)
        np.testing.assert_allclose(tt.p, [0.0, 0.0, 0.0], atol=1e-15)

    def test_composition_with_identity(self):
        t = ee_transform()
        left = HomTransform.identity() @ t
        np.testing.assert_array_equal(left.r, t.r)
        np.testing.assert_array_equal(left.p, t.p)


class TestHomTransform:
    def test_from_matrix_requires_4x4(self):
        with pytest.raises(ValueError):
            HomTransform.from_matrix(np.eye(3))

    def test_inverse_round_trip(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            t = random_rigid(rng)
            ident = t @ t.inverse()
            np.testing.assert_allclose(ident.r, np.eye(3), atol=1e-12)
            np.testing.assert_allclose(ident.p, np.zeros(3), atol=1e-12)

    def test_compose_matches_matrix_product(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            t1, t2 = random_rigid(rng), random_rigid(rng)
            np.testing.assert_allclose(
                (t1 @ t2).as_matrix(), t1.as_matrix() @ t2.as_matrix(), atol=1e-12
            )

    def test_require_rigid_rejects_scaled_rotation(self):
        with pytest.raises(ValueError):
            HomTransform(np.eye(3) * 1.001, np.zeros(3)).require_rigid()


class TestForwardFrames:
    def test_zero_config_tip_matches_golden_fixture(self):
        frames = forward_frames(np.zeros(7))
        np.testing.assert_allclose(frames[-1].p, ZERO_CONFIG_TIP, atol=1e-9)
        np.testing.assert_allclose(frames[-2].p, ZERO_CONFIG_JOINT7, atol=1e-9)

    def test_zero_config_tip_against_inline_composition(self):
        # independent recomputation with explicit loops, no shared code
        def dh(alpha, a, d, theta):
            c, s = math.cos(theta), math.sin(theta)
            ca, sa = math.cos(alpha), math.sin(alpha)
            return [
                [c, -ca * s, sa * s, a * c],
                [s, ca * c, -sa * c, a * s],
                [0.0, sa, ca, d],
                [0.0, 0.0, 0.0, 1.0],
            ]

        def mul(x, y):
            return [
                [sum(x[i][k] * y[k][j] for k in range(4)) for j in range(4)]
                for i in range(4)
            ]

        cur = dh(math.pi, 0.0, 0.0, 0.0)
        for row in DH_TABLE[1:]:
            cur = mul(cur, dh(row.alpha, row.a, row.d, row.theta_offset))
        cur = mul(cur, [[1, 0, 0, 0], [0, -1, 0, 0], [0, 0, -1, -0.0615], [0, 0, 0, 1]])
        tip = [cur[i][3] for i in range(3)]
        np.testing.assert_allclose(tip, ZERO_CONFIG_TIP, atol=1e-9)

    def test_returns_nine_frames(self):
        assert len(forward_frames(np.zeros(7))) == NUM_FRAMES

    def test_reach_bound_constant(self):
        assert REACH_BOUND == pytest.approx(1.2734, abs=1e-12)

    def test_deterministic_bitwise(self):
        q = np.random.default_rng(5).uniform(0, 2 * math.pi, 7)
        a = forward_frames(q)
        b = forward_frames(q)
        for fa, fb in zip(a, b):
            np.testing.assert_array_equal(fa.r, fb.r)
            np.testing.assert_array_equal(fa.p, fb.p)

    def test_chain_consistency_with_link_transform(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            q = rng.uniform(0, 2 * math.pi, 7)
            frames = forward_frames(q)
            cur = link_transform(DH_TABLE[0], 0.0)
            np.testing.assert_allclose(frames[0].as_matrix(), cur.as_matrix(), atol=1e-12)
            for k in range(1, 8):
                cur = cur @ link_transform(DH_TABLE[k], q[k - 1])
                np.testing.assert_allclose(frames[k].as_matrix(), cur.as_matrix(), atol=1e-12)
            tip = cur @ ee_transform()
            np.testing.assert_allclose(frames[8].as_matrix(), tip.as_matrix(), atol=1e-12)

    def test_rotations_orthonormal_and_reach_bounded(self):
        rng = np.random.default_rng(7)
        for _ in range(2000):
            q = rng.uniform(0, 2 * math.pi, 7)
            frames = forward_frames(q)
            for f in frames:
                assert f.rotation_defect() <= 1e-9
            assert np.linalg.norm(frames[-1].p) <= REACH_BOUND + 1e-12

    def test_joint_one_half_turn_reflects_tip(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            q = rng.uniform(0, 2 * math.pi, 7)
            tip = forward_frames(q)[-1].p
            q2 = q.copy()
            q2[0] += math.pi
            tip2 = forward_frames(q2)[-1].p
            np.testing.assert_allclose(tip2, [-tip[0], -tip[1], tip[2]], atol=1e-12)

    def test_wrong_joint_count_rejected(self):
        with pytest.raises(ValueError):
            forward_frames(np.zeros(6))
        with pytest.raises(ValueError):
            forward_frames([0, 0, 0, float("nan"), 0, 0, 0])


class TestControlPoints:
    def test_identity_base_starts_at_origin(self):
        poly = control_points(np.random.default_rng(9).uniform(0, 6.28, 7), HomTransform.identity())
        np.testing.assert_array_equal(poly.points[0], np.zeros(3))

    def test_zero_config_point_one(self):
        poly = control_points(np.zeros(7), HomTransform.identity())
        np.testing.assert_allclose(poly.points[1], [0.0, 0.0, 0.2848], atol=1e-12)

    def test_pure_translation_shifts_every_point(self):
        rng = np.random.default_rng(10)
        q = rng.uniform(0, 6.28, 7)
        base = control_points(q, HomTransform.identity())
        shifted = control_points(q, HomTransform.translation((1.0, 0.0, 0.0)))
        np.testing.assert_allclose(shifted.points, base.points + [1.0, 0.0, 0.0], atol=1e-12)

    def test_base_rotation_equivariance(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            q = rng.uniform(0, 6.28, 7)
            rot = random_rotation(rng)
            base = control_points(q, HomTransform.identity())
            rotated = control_points(q, HomTransform(rot, np.zeros(3)))
            np.testing.assert_allclose(rotated.points, base.points @ rot.T, atol=1e-12)

    def test_matches_forward_frame_translations(self):
        rng = np.random.default_rng(12)
        q = rng.uniform(0, 6.28, 7)
        base = random_rigid(rng)
        poly = control_points(q, base)
        for k, frame in enumerate(forward_frames(q)):
            np.testing.assert_allclose(poly.points[k], (base @ frame).p, atol=1e-12)

    def test_polyline_shape_validation(self):
        with pytest.raises(ValueError):
            ArmPolyline(np.zeros((8, 3)))
        with pytest.raises(ValueError):
            ArmPolyline(np.full((9, 3), np.nan))


class TestRelativeBaseTransform:
    def test_all_identity(self):
        ident = HomTransform.identity()
        t = relative_base_transform(ident, ident, ident, ident)
        np.testing.assert_allclose(t.r, np.eye(3), atol=1e-15)
        np.testing.assert_allclose(t.p, np.zeros(3), atol=1e-15)

    def test_common_factors_cancel(self):
        rng = np.random.default_rng(13)
        marker = random_rigid(rng)
        mount = random_rigid(rng)
        t = relative_base_transform(marker, marker, mount, mount)
        np.testing.assert_allclose(t.r, np.eye(3), atol=1e-12)
        np.testing.assert_allclose(t.p, np.zeros(3), atol=1e-12)

    def test_against_matrix_composition_oracle(self):
        rng = np.random.default_rng(14)
        for _ in range(50):
            m1, m2, b1, b2 = (random_rigid(rng) for _ in range(4))
            got = relative_base_transform(m1, m2, b1, b2).as_matrix()
            expected = (
                np.linalg.inv(m1.as_matrix() @ np.linalg.inv(b1.as_matrix()))
                @ m2.as_matrix()
                @ np.linalg.inv(b2.as_matrix())
            )
            np.testing.assert_allclose(got, expected, atol=1e-9)
