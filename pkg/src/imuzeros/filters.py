"""atan2, Mahony and Madgwick attitude estimators.

Both ODE filters are advanced with one fixed-step RK4 step per sample, the
sample being held over the step, and renormalize the quaternion afterwards.
An accelerometer reading with ``|a| <= 1e-6`` g switches the step to
gyro-only integration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ._backend import kernels
from .errors import DegenerateRoll, NonUnitQuaternion
from .imu_model import ImuSample, ImuSeries, normalize_accel
from .quaternion import Quaternion, euler_from_quat_array

FILTER_KINDS = ("atan2", "mahony", "madgwick")


@dataclass(frozen=True)
class MahonyGains:
    """Proportional gain ``kp`` (1/s) and integral gain ``ki`` (1/s²).

    ``kp`` must be positive unless the gains were built with
    :meth:`gyro_only`, which sets both to zero.
    """

    kp: float
    ki: float = 0.0
    gyro_only_mode: bool = field(default=False, repr=False)

    def __post_init__(self):
        if self.kp < 0.0 or self.ki < 0.0:
            raise ValueError("Mahony gains must be non-negative")
        if self.gyro_only_mode:
            if self.kp != 0.0 or self.ki != 0.0:
                raise ValueError("gyro-only mode requires kp = ki = 0")
        elif not self.kp > 0.0:
            raise ValueError("kp must be > 0 (use MahonyGains.gyro_only() for pure integration)")

    @classmethod
    def gyro_only(cls) -> MahonyGains:
        return cls(0.0, 0.0, gyro_only_mode=True)


def _check_state_quat(q: Quaternion) -> None:
    if not q.is_unit(1e-6):
        raise NonUnitQuaternion(f"filter state quaternion has norm {q.norm():.9g}")


@dataclass(frozen=True)
class MahonyState:
    q: Quaternion
    bias: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        _check_state_quat(self.q)


@dataclass(frozen=True)
class MadgwickState:
    q: Quaternion
    beta: float

    def __post_init__(self):
        _check_state_quat(self.q)
        if self.beta < 0.0:
            raise ValueError("beta must be >= 0")


def atan2_roll(a_unit) -> float:
    """Roll recovered from a normalized accelerometer reading, ``atan2(a_y, a_z)``."""
    ax, ay, az = (float(c) for c in a_unit)
    if ay == 0.0 and az == 0.0:
        raise DegenerateRoll("gravity along the body x-axis leaves roll undefined")
    return math.atan2(ay, az)


def mahony_derivative(state: MahonyState, sample: ImuSample, gains: MahonyGains):
    """Quaternion rate (4,) and bias-state rate (3,) of the Mahony ODE."""
    q = state.q
    r = kernels.mahony_rate(q.w, q.x, q.y, q.z, *state.bias, *sample.accel, *sample.gyro, gains.kp, gains.ki)
    return np.array(r[:4]), np.array(r[4:])


def mahony_step(state: MahonyState, sample: ImuSample, gains: MahonyGains, dt: float) -> MahonyState:
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    q = state.q
    r = kernels.mahony_step(q.w, q.x, q.y, q.z, *state.bias, *sample.accel, *sample.gyro, gains.kp, gains.ki, dt)
    return MahonyState(Quaternion(*r[:4]), tuple(r[4:]))


def madgwick_cost(q: Quaternion, a_unit) -> float:
    """``|q* ⊗ (0,0,0,1) ⊗ q - (0, a)|²``."""
    w, x, y, z = q
    ax, ay, az = (float(c) for c in a_unit)
    fx = 2.0 * (x * z - w * y) - ax
    fy = 2.0 * (y * z + w * x) - ay
    fz = w * w - x * x - y * y + z * z - az
    return fx * fx + fy * fy + fz * fz


def madgwick_gradient(q: Quaternion, a_unit) -> np.ndarray:
    """Analytic gradient of :func:`madgwick_cost` in ``(w, x, y, z)``."""
    return np.array(kernels.madgwick_gradient(q.w, q.x, q.y, q.z, *(float(c) for c in a_unit)))


def madgwick_step(state: MadgwickState, sample: ImuSample, dt: float, project: bool = True) -> MadgwickState:
    """Advance the Madgwick filter by one sample.

    ``project`` enables the sliding-surface landing described in
    :func:`imuzeros._kernels_py.madgwick_step`.
    """
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    q = state.q
    r = kernels.madgwick_step(q.w, q.x, q.y, q.z, *sample.accel, *sample.gyro, state.beta, dt, project)
    return MadgwickState(Quaternion(*r), state.beta)


def _as_series(samples) -> ImuSeries:
    if isinstance(samples, ImuSeries):
        return samples
    return ImuSeries.from_samples(samples)


def _step_sizes(t: np.ndarray) -> np.ndarray:
    dt = np.empty_like(t)
    if t.shape[0]:
        dt[0] = 0.0
        dt[1:] = np.diff(t)
    return dt


def mahony_gains(params: Mapping[str, float]) -> MahonyGains:
    kp = float(params.get("kp", 1.0))
    ki = float(params.get("ki", 0.0))
    if kp == 0.0 and ki == 0.0:
        return MahonyGains.gyro_only()
    return MahonyGains(kp, ki)


def run_mahony(series: ImuSeries, gains: MahonyGains, q0: Quaternion, bias0=(0.0, 0.0, 0.0), dt=None):
    """Quaternion ``(N, 4)`` and bias ``(N, 3)`` histories of the Mahony filter.

    Row ``k`` is the state after processing sample ``k``.  By default the
    first sample is taken at the initial state (zero-length step) and each
    later sample is integrated over the preceding time gap.
    """
    _check_state_quat(q0)
    n = len(series)
    dt = _step_sizes(series.t) if dt is None else np.ascontiguousarray(dt, dtype=float)
    q_out = np.empty((n, 4))
    b_out = np.empty((n, 3))
    kernels.mahony_series(q0.as_array(), np.asarray(bias0, dtype=float), series.accel, series.gyro,
                          dt, float(gains.kp), float(gains.ki), q_out, b_out)
    return q_out, b_out


def run_madgwick(series: ImuSeries, beta: float, q0: Quaternion, project: bool = True, dt=None) -> np.ndarray:
    """Quaternion history ``(N, 4)`` of the Madgwick filter (see :func:`run_mahony`)."""
    _check_state_quat(q0)
    if beta < 0.0:
        raise ValueError("beta must be >= 0")
    n = len(series)
    dt = _step_sizes(series.t) if dt is None else np.ascontiguousarray(dt, dtype=float)
    q_out = np.empty((n, 4))
    kernels.madgwick_series(q0.as_array(), series.accel, series.gyro, dt, float(beta), bool(project), q_out)
    return q_out


def atan2_angles(accel: np.ndarray) -> np.ndarray:
    """Roll and pitch from accelerometer rows; yaw is unobservable and set to 0."""
    accel = np.asarray(accel, dtype=float).reshape(-1, 3)
    out = np.zeros((accel.shape[0], 3))
    out[:, 0] = np.arctan2(accel[:, 1], accel[:, 2])
    out[:, 1] = np.arctan2(-accel[:, 0], np.hypot(accel[:, 1], accel[:, 2]))
    return out


def estimate_series(kind: str, params: Mapping[str, float] | None, samples: ImuSeries | Sequence[ImuSample],
                    q0: Quaternion | None = None) -> np.ndarray:
    """Per-sample ``(roll, pitch, yaw)`` estimates as an ``(N, 3)`` array.

    Parameters
    ----------
    kind : {"atan2", "mahony", "madgwick"}
    params : mapping
        ``kp``/``ki`` for Mahony, ``beta`` (and optionally ``project``) for
        Madgwick; ignored for atan2.
    samples : ImuSeries or sequence of ImuSample
        Strictly increasing timestamps.
    q0 : Quaternion, optional
        Initial estimate, identity by default.

    Raises
    ------
    NonMonotonicTime
    """
    params = dict(params or {})
    series = _as_series(samples)
    series.check_monotonic()
    if kind not in FILTER_KINDS:
        raise ValueError(f"unknown filter kind {kind!r}; expected one of {FILTER_KINDS}")
    if len(series) == 0:
        return np.zeros((0, 3))
    if kind == "atan2":
        return atan2_angles(series.accel)
    q0 = q0 if q0 is not None else Quaternion.identity()
    if kind == "mahony":
        q, _ = run_mahony(series, mahony_gains(params), q0)
    else:
        q = run_madgwick(series, float(params.get("beta", 0.1)), q0, bool(params.get("project", True)))
    return euler_from_quat_array(q)


__all__ = [
    "FILTER_KINDS",
    "MadgwickState",
    "MahonyGains",
    "MahonyState",
    "atan2_angles",
    "atan2_roll",
    "estimate_series",
    "madgwick_cost",
    "madgwick_gradient",
    "madgwick_step",
    "mahony_derivative",
    "mahony_step",
    "normalize_accel",
    "run_madgwick",
    "run_mahony",
]
