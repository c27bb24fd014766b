from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from artimanip.geometry import (
    Pose,
    axis_angle_matrix,
    is_rotation,
    look_at,
    quat_angle,
    quat_from_axis_angle,
    quat_from_matrix,
    quat_mul,
    quat_rotate,
    quat_to_matrix,
    rot_z,
)

angles = st.floats(-np.pi, np.pi)
axes = st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)).filter(lambda v: np.linalg.norm(v) > 0.1)


def test_rot_z_quarter_turn():
    assert np.allclose(rot_z(np.pi / 2) @ [1.0, 0.0, 0.0], [0.0, 1.0, 0.0])


@given(axes, angles)
def test_axis_angle_matrix_is_rotation(axis, angle):
    R = axis_angle_matrix(axis, angle)
    assert is_rotation(R, 1e-9)
    a = np.asarray(axis) / np.linalg.norm(axis)
    assert np.allclose(R @ a, a)


@given(axes, angles)
def test_quaternion_matches_matrix(axis, angle):
    q = quat_from_axis_angle(axis, angle)
    R = axis_angle_matrix(axis, angle)
    assert np.allclose(quat_to_matrix(q), R, atol=1e-9)
    q2 = quat_from_matrix(R)
    assert quat_angle(q, q2) < 1e-6


@given(axes, angles, axes, angles)
def test_quaternion_product_composes(a1, t1, a2, t2):
    q = quat_mul(quat_from_axis_angle(a1, t1), quat_from_axis_angle(a2, t2))
    R = axis_angle_matrix(a1, t1) @ axis_angle_matrix(a2, t2)
    v = np.array([0.3, -0.2, 0.9])
    assert np.allclose(quat_rotate(q, v), R @ v, atol=1e-9)


def test_quat_angle_of_known_rotation():
    q = quat_from_axis_angle((0, 0, 1), 0.3)
    assert quat_angle(q, np.array([1.0, 0, 0, 0])) == pytest.approx(0.3)


@given(axes, angles, st.tuples(*[st.floats(-2, 2)] * 3))
def test_pose_inverse_round_trip(axis, angle, t):
    pose = Pose(axis_angle_matrix(axis, angle), np.asarray(t))
    pts = np.random.default_rng(0).normal(size=(5, 3))
    assert np.allclose(pose.inverse().apply(pose.apply(pts)), pts, atol=1e-9)
    assert np.allclose((pose @ pose.inverse()).matrix(), np.eye(4), atol=1e-9)


def test_pose_rejects_non_rotation():
    with pytest.raises(ValueError):
        Pose(np.diag([1.0, 1.0, -1.0]), np.zeros(3))


def test_look_at_optical_frame():
    R = look_at([0, -1, 0], [0, 0, 0])
    assert np.allclose(R[:, 2], [0, 1, 0])
    # image y points down in the world
    assert R[2, 1] < 0
    assert is_rotation(R)
