import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from imuzeros.errors import NonUnitQuaternion
from imuzeros.quaternion import (
    EulerAngles,
    Quaternion,
    euler_from_quat_array,
    euler_to_quat,
    quat_array_from_euler,
    quat_conj,
    quat_mul,
    quat_to_euler,
    rotate_vector,
    wrap_angle,
)

finite = st.floats(-10.0, 10.0, allow_nan=False)
angles = st.floats(-math.pi, math.pi, allow_nan=False)


@st.composite
def unit_quaternions(draw):
    v = [draw(st.floats(-1.0, 1.0)) for _ in range(4)]
    n = math.sqrt(sum(c * c for c in v))
    if n < 1e-3:
        return Quaternion.identity()
    return Quaternion(*(c / n for c in v))


def as_scipy(q):
    return Rotation.from_quat([q.x, q.y, q.z, q.w])


@pytest.mark.parametrize(
    "a, b, expected",
    [
        ((0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)),   # i j = k
        ((0, 0, 1, 0), (0, 1, 0, 0), (0, 0, 0, -1)),  # j i = -k
        ((0, 1, 0, 0), (0, 1, 0, 0), (-1, 0, 0, 0)),  # i i = -1
        ((1, 2, 3, 4), (1, 0, 0, 0), (1, 2, 3, 4)),
    ],
)
def test_hamilton_products(a, b, expected):
    assert tuple(quat_mul(Quaternion(*a), Quaternion(*b))) == pytest.approx(expected)


@given(st.tuples(finite, finite, finite, finite), st.tuples(finite, finite, finite, finite),
       st.tuples(finite, finite, finite, finite))
def test_product_is_associative(a, b, c):
    a, b, c = Quaternion(*a), Quaternion(*b), Quaternion(*c)
    lhs = quat_mul(quat_mul(a, b), c).as_array()
    rhs = quat_mul(a, quat_mul(b, c)).as_array()
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-9)


@given(st.tuples(finite, finite, finite, finite), st.tuples(finite, finite, finite, finite))
def test_norm_is_multiplicative_and_conj_reverses(a, b):
    a, b = Quaternion(*a), Quaternion(*b)
    assert (a * b).norm() == pytest.approx(a.norm() * b.norm(), rel=1e-12, abs=1e-12)
    assert np.allclose(quat_conj(a * b).as_array(), (quat_conj(b) * quat_conj(a)).as_array(), atol=1e-9)


@given(unit_quaternions(), st.tuples(finite, finite, finite))
def test_rotate_vector_matches_rotation_matrix(q, v):
    expected = as_scipy(q).apply(np.array(v), inverse=True)
    assert np.allclose(rotate_vector(q, v), expected, atol=1e-9)


@given(unit_quaternions(), unit_quaternions(), st.tuples(finite, finite, finite))
def test_rotation_composition(a, b, v):
    lhs = rotate_vector((a * b).renormalized(), v)
    rhs = rotate_vector(b, rotate_vector(a, v))
    assert np.allclose(lhs, rhs, atol=1e-9)


@given(unit_quaternions())
def test_predicted_gravity_closed_form(q):
    w, x, y, z = q
    expected = [2 * (x * z - w * y), 2 * (y * z + w * x), w * w - x * x - y * y + z * z]
    assert np.allclose(rotate_vector(q, (0, 0, 1)), expected, atol=1e-12)


def test_roll_rotation_sees_gravity_in_body_y():
    # rolled by +phi, gravity direction appears at +phi about body x
    phi = 0.3
    g = rotate_vector(Quaternion.from_roll(phi), (0, 0, 1))
    assert g == pytest.approx([0.0, math.sin(phi), math.cos(phi)])


@given(angles, st.floats(-1.5, 1.5), angles)
def test_euler_round_trip(roll, pitch, yaw):
    e = quat_to_euler(euler_to_quat((roll, pitch, yaw)))
    assert np.allclose(wrap_angle(np.array(e) - np.array([roll, pitch, yaw])), 0.0, atol=1e-9)


@pytest.mark.filterwarnings("ignore:Gimbal lock detected")
@given(unit_quaternions())
def test_euler_matches_scipy_zyx(q):
    yaw, pitch, roll = as_scipy(q).as_euler("ZYX")
    e = quat_to_euler(q)
    if abs(abs(e.pitch) - math.pi / 2) < 1e-4:
        return  # gimbal lock: roll and yaw are not unique
    assert np.allclose(wrap_angle(np.array(e) - np.array([roll, pitch, yaw])), 0.0, atol=1e-7)


def test_euler_from_single_axis_rotations():
    assert quat_to_euler(Quaternion.from_roll(0.4)) == pytest.approx(EulerAngles(0.4, 0.0, 0.0))
    h = math.sqrt(0.5)
    assert quat_to_euler(Quaternion(h, 0.0, h, 0.0)).pitch == pytest.approx(math.pi / 2)
    assert quat_to_euler(Quaternion(h, 0.0, 0.0, h)).yaw == pytest.approx(math.pi / 2)


def test_pitch_argument_clamped_within_slack():
    h = math.sqrt(0.5)
    q = Quaternion(h, 0.0, h * (1 + 1e-10), 0.0)
    assert quat_to_euler(q).pitch == math.pi / 2


def test_pitch_argument_beyond_slack_raises():
    h = math.sqrt(0.5)
    with pytest.raises(NonUnitQuaternion):
        quat_to_euler(Quaternion(h, 0.0, h * (1 + 1e-7), 0.0))


@pytest.mark.parametrize("fn", [lambda q: rotate_vector(q, (1, 0, 0)), quat_to_euler])
def test_non_unit_input_rejected(fn):
    with pytest.raises(NonUnitQuaternion):
        fn(Quaternion(1.0, 0.01, 0.0, 0.0))


def test_normalized_rejects_zero():
    with pytest.raises(NonUnitQuaternion):
        Quaternion.normalized(0, 0, 0, 0)


def test_vectorized_conversions_match_scalar():
    rng = np.random.default_rng(3)
    e = np.column_stack([rng.uniform(-3, 3, 50), rng.uniform(-1.4, 1.4, 50), rng.uniform(-3, 3, 50)])
    q = quat_array_from_euler(e)
    for k in range(50):
        assert np.allclose(q[k], euler_to_quat(e[k]).as_array(), atol=1e-15)
        assert np.allclose(euler_from_quat_array(q[k:k + 1])[0], quat_to_euler(Quaternion(*q[k])), atol=1e-15)


@pytest.mark.parametrize(
    "a, expected",
    [(0.0, 0.0), (math.pi, math.pi), (-math.pi, math.pi), (3 * math.pi, math.pi), (2 * math.pi + 0.1, 0.1),
     (-0.1, -0.1)],
)
def test_wrap_angle(a, expected):
    assert wrap_angle(a) == pytest.approx(expected, abs=1e-12)


def test_wrapped_difference_is_short_way_round():
    d = wrap_angle(math.radians(-179) - math.radians(179))
    assert d == pytest.approx(math.radians(2))
