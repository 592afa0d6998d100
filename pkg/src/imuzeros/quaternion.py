"""Scalar-first unit-quaternion algebra and Euler conversions.

Conventions shared by every module:

* components are ``(w, x, y, z)`` with ``w`` the scalar part;
* a quaternion ``q`` maps body vectors to the inertial frame as
  ``v_I = q ⊗ (0, v_K) ⊗ q*``;
* :func:`rotate_vector` applies the conjugate sandwich ``q* ⊗ (0, v) ⊗ q``,
  i.e. it expresses an inertial vector in the body frame.  With
  ``v = (0, 0, 1)`` this is the predicted gravity direction used by the
  Mahony and Madgwick corrections.

Composition follows from the sandwich: ``rotate_vector(a ⊗ b, v) ==
rotate_vector(b, rotate_vector(a, v))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from .errors import NonUnitQuaternion

UNIT_TOL = 1e-6
_ASIN_SLACK = 1e-9


@dataclass(frozen=True, slots=True)
class Quaternion:
    """Immutable quaternion ``w + xi + yj + zk``.

    Non-unit values are allowed (pure quaternions ``(0, v)`` appear inside
    products); operations that need a rotation check the norm themselves.
    Use :meth:`normalized` to build a unit quaternion from arbitrary input.
    """

    w: float
    x: float
    y: float
    z: float

    @classmethod
    def identity(cls) -> Quaternion:
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def normalized(cls, w, x, y, z) -> Quaternion:
        n = math.sqrt(w * w + x * x + y * y + z * z)
        if n == 0.0:
            raise NonUnitQuaternion("cannot normalize the zero quaternion")
        return cls(w / n, x / n, y / n, z / n)

    @classmethod
    def from_array(cls, a) -> Quaternion:
        w, x, y, z = (float(c) for c in a)
        return cls(w, x, y, z)

    @classmethod
    def from_roll(cls, roll: float) -> Quaternion:
        """Pure rotation about the body x-axis."""
        return cls(math.cos(0.5 * roll), math.sin(0.5 * roll), 0.0, 0.0)

    def __iter__(self) -> Iterator[float]:
        yield self.w
        yield self.x
        yield self.y
        yield self.z

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    def norm(self) -> float:
        return math.sqrt(self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z)

    def is_unit(self, tol: float = UNIT_TOL) -> bool:
        return abs(self.norm() - 1.0) <= tol

    def renormalized(self) -> Quaternion:
        return Quaternion.normalized(self.w, self.x, self.y, self.z)

    def conj(self) -> Quaternion:
        return quat_conj(self)

    def __mul__(self, other: Quaternion) -> Quaternion:
        return quat_mul(self, other)


class EulerAngles(NamedTuple):
    """Roll, pitch, yaw in radians (roll and yaw in (-π, π], pitch in [-π/2, π/2])."""

    roll: float
    pitch: float
    yaw: float


def quat_mul(a: Quaternion, b: Quaternion) -> Quaternion:
    """Hamilton product ``a ⊗ b``."""
    return Quaternion(
        a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
    )


def quat_conj(q: Quaternion) -> Quaternion:
    return Quaternion(q.w, -q.x, -q.y, -q.z)


def _require_unit(q: Quaternion) -> None:
    if not q.is_unit():
        raise NonUnitQuaternion(f"expected a unit quaternion, got norm {q.norm():.9g}")


def rotate_vector(q: Quaternion, v) -> np.ndarray:
    """Vector part of ``q* ⊗ (0, v) ⊗ q``.

    Parameters
    ----------
    q : Quaternion
        Unit quaternion (checked to within ``1e-6``).
    v : array_like, shape (3,)

    Returns
    -------
    numpy.ndarray, shape (3,)
    """
    _require_unit(q)
    vx, vy, vz = (float(c) for c in v)
    p = quat_mul(quat_mul(quat_conj(q), Quaternion(0.0, vx, vy, vz)), q)
    return np.array([p.x, p.y, p.z])


def quat_to_euler(q: Quaternion) -> EulerAngles:
    """Roll, pitch and yaw of a unit quaternion.

    The arcsine argument for pitch is clamped when it exceeds one by no more
    than ``1e-9`` (rounding on unit input); larger excursions mean the input
    was not a rotation and raise :class:`NonUnitQuaternion`.
    """
    _require_unit(q)
    w, x, y, z = q.w, q.x, q.y, q.z
    roll = math.atan2(w * x + y * z, 0.5 - x * x - y * y)
    s = 2.0 * (w * y - x * z)
    if abs(s) > 1.0:
        if abs(s) - 1.0 > _ASIN_SLACK:
            raise NonUnitQuaternion(f"pitch arcsine argument {s!r} outside [-1, 1]")
        s = math.copysign(1.0, s)
    pitch = math.asin(s)
    yaw = math.atan2(w * z + x * y, 0.5 - y * y - z * z)
    return EulerAngles(roll, pitch, yaw)


def euler_to_quat(e) -> Quaternion:
    """Inverse of :func:`quat_to_euler` (ZYX intrinsic order, yaw-pitch-roll)."""
    roll, pitch, yaw = e
    cr, sr = math.cos(0.5 * roll), math.sin(0.5 * roll)
    cp, sp = math.cos(0.5 * pitch), math.sin(0.5 * pitch)
    cy, sy = math.cos(0.5 * yaw), math.sin(0.5 * yaw)
    return Quaternion.normalized(
        cr * cp * cy + sr * sp * sy,
        sr * cp * cy - cr * sp * sy,
        cr * sp * cy + sr * cp * sy,
        cr * cp * sy - sr * sp * cy,
    )


def euler_from_quat_array(q: np.ndarray) -> np.ndarray:
    """Vectorized :func:`quat_to_euler` over an ``(N, 4)`` array.

    Returns an ``(N, 3)`` array of ``(roll, pitch, yaw)``.  No unit check.
    """
    q = np.asarray(q, dtype=float)
    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    out = np.empty((q.shape[0], 3))
    out[:, 0] = np.arctan2(w * x + y * z, 0.5 - x * x - y * y)
    out[:, 1] = np.arcsin(np.clip(2.0 * (w * y - x * z), -1.0, 1.0))
    out[:, 2] = np.arctan2(w * z + x * y, 0.5 - y * y - z * z)
    return out


def quat_array_from_euler(e: np.ndarray) -> np.ndarray:
    """Vectorized :func:`euler_to_quat`; ``(N, 3)`` angles to ``(N, 4)`` quaternions."""
    e = np.asarray(e, dtype=float)
    cr, sr = np.cos(0.5 * e[:, 0]), np.sin(0.5 * e[:, 0])
    cp, sp = np.cos(0.5 * e[:, 1]), np.sin(0.5 * e[:, 1])
    cy, sy = np.cos(0.5 * e[:, 2]), np.sin(0.5 * e[:, 2])
    q = np.column_stack([
        cr * cp * cy + sr * sp * sy,
        sr * cp * cy - cr * sp * sy,
        cr * sp * cy + sr * cp * sy,
        cr * cp * sy - sr * sp * cy,
    ])
    return q / np.linalg.norm(q, axis=1, keepdims=True)


def wrap_angle(a):
    """Wrap angles to (-π, π]; values already in range are returned unchanged."""
    a = np.asarray(a, dtype=float)
    w = np.mod(a + np.pi, 2.0 * np.pi) - np.pi
    w = np.where(w == -np.pi, np.pi, w)
    w = np.where((a > -np.pi) & (a <= np.pi), a, w)
    return w if w.ndim else float(w)
