"""Lever-arm IMU measurements of a roll pendulum.

An IMU sits at distance ``l`` from the roll axis and turns with roll ``phi``
while pitch and yaw stay zero.  In units of standard gravity it reads::

    accel = (0, sin(phi) - (l/g) * phi_ddot, cos(phi) - (l/g) * phi_dot**2)
    gyro  = (phi_dot, 0, 0)
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import NearZeroAcceleration, NonMonotonicTime
from .quaternion import wrap_angle

ACCEL_EPS = 1e-6  # g


@dataclass(frozen=True)
class PendulumConfig:
    """Lever arm ``l`` in metres and gravity ``g`` in m/s² (normalized to 1 by default)."""

    l: float = 0.0
    g: float = 1.0

    def __post_init__(self):
        if not self.l >= 0.0:
            raise ValueError(f"lever arm must be >= 0, got {self.l}")
        if not self.g > 0.0:
            raise ValueError(f"gravity must be > 0, got {self.g}")


@dataclass(frozen=True)
class ImuSample:
    t: float
    accel: tuple[float, float, float]
    gyro: tuple[float, float, float]

    def __post_init__(self):
        vals = (self.t, *self.accel, *self.gyro)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("IMU sample contains non-finite values")


@dataclass
class ImuSeries:
    """Column-oriented batch of IMU samples."""

    t: np.ndarray
    accel: np.ndarray
    gyro: np.ndarray

    def __post_init__(self):
        self.t = np.ascontiguousarray(self.t, dtype=float)
        self.accel = np.ascontiguousarray(self.accel, dtype=float).reshape(-1, 3)
        self.gyro = np.ascontiguousarray(self.gyro, dtype=float).reshape(-1, 3)
        n = self.t.shape[0]
        if self.accel.shape[0] != n or self.gyro.shape[0] != n:
            raise ValueError("t, accel and gyro lengths differ")

    def __len__(self) -> int:
        return self.t.shape[0]

    def __getitem__(self, k: int) -> ImuSample:
        return ImuSample(float(self.t[k]), tuple(self.accel[k].tolist()), tuple(self.gyro[k].tolist()))

    @classmethod
    def from_samples(cls, samples: Sequence[ImuSample]) -> ImuSeries:
        samples = list(samples)
        return cls(
            np.array([s.t for s in samples], dtype=float),
            np.array([s.accel for s in samples], dtype=float).reshape(-1, 3),
            np.array([s.gyro for s in samples], dtype=float).reshape(-1, 3),
        )

    def check_monotonic(self) -> None:
        if len(self) > 1:
            bad = np.nonzero(np.diff(self.t) <= 0.0)[0]
            if bad.size:
                k = int(bad[0]) + 1
                raise NonMonotonicTime(f"t[{k}]={self.t[k]!r} does not exceed t[{k - 1}]={self.t[k - 1]!r}")


def measure(cfg: PendulumConfig, phi: float, phi_dot: float, phi_ddot: float, t: float = 0.0) -> ImuSample:
    """Single lever-arm IMU reading for roll state ``(phi, phi_dot, phi_ddot)``."""
    r = cfg.l / cfg.g
    accel = (0.0, math.sin(phi) - r * phi_ddot, math.cos(phi) - r * phi_dot * phi_dot)
    return ImuSample(t, accel, (phi_dot, 0.0, 0.0))


def measure_array(cfg: PendulumConfig, phi, phi_dot, phi_ddot):
    """Vectorized :func:`measure`; returns ``(accel, gyro)`` arrays of shape ``(N, 3)``."""
    phi = np.asarray(phi, dtype=float)
    phi_dot = np.asarray(phi_dot, dtype=float)
    phi_ddot = np.asarray(phi_ddot, dtype=float)
    r = cfg.l / cfg.g
    n = phi.shape[0]
    accel = np.zeros((n, 3))
    accel[:, 1] = np.sin(phi) - r * phi_ddot
    accel[:, 2] = np.cos(phi) - r * phi_dot * phi_dot
    gyro = np.zeros((n, 3))
    gyro[:, 0] = phi_dot
    return accel, gyro


def normalize_accel(a) -> np.ndarray:
    """Unit gravity direction from an accelerometer reading.

    Raises
    ------
    NearZeroAcceleration
        If ``|a| <= 1e-6`` g.
    """
    a = np.asarray(a, dtype=float)
    n = float(np.linalg.norm(a))
    if n <= ACCEL_EPS:
        raise NearZeroAcceleration(f"|a| = {n:.3g} g is below {ACCEL_EPS:g} g")
    return a / n


# Trajectories: callables mapping a time array to (phi, phi_dot, phi_ddot).

RollTrajectory = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class Constant:
    phi: float = 0.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        z = np.zeros_like(t)
        return z + self.phi, z, z.copy()


@dataclass(frozen=True)
class Sinusoid:
    """``phi(t) = offset + amplitude * sin(omega * t + phase)``."""

    amplitude: float
    omega: float
    offset: float = 0.0
    phase: float = 0.0

    def __call__(self, t):
        arg = self.omega * np.asarray(t, dtype=float) + self.phase
        s, c = np.sin(arg), np.cos(arg)
        a, w = self.amplitude, self.omega
        return self.offset + a * s, a * w * c, -a * w * w * s


@dataclass(frozen=True)
class SmoothStep:
    """Roll moves from ``start`` to ``end`` over ``[t_step, t_step + ramp]``.

    The transition is the cubic ``3u² - 2u³`` so the rate is continuous and
    the acceleration exists everywhere.
    """

    start: float
    end: float
    t_step: float = 0.0
    ramp: float = 1.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        d = self.end - self.start
        u = np.clip((t - self.t_step) / self.ramp, 0.0, 1.0)
        inside = (t > self.t_step) & (t < self.t_step + self.ramp)
        phi = self.start + d * (3.0 * u**2 - 2.0 * u**3)
        phi_dot = np.where(inside, d * (6.0 * u - 6.0 * u**2) / self.ramp, 0.0)
        phi_ddot = np.where(inside, d * (6.0 - 12.0 * u) / self.ramp**2, 0.0)
        return phi, phi_dot, phi_ddot


@dataclass(frozen=True)
class Chirp:
    """Linear chirp sweeping ``omega0 -> omega1`` rad/s over ``duration`` seconds."""

    amplitude: float
    omega0: float
    omega1: float
    duration: float
    offset: float = 0.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        k = (self.omega1 - self.omega0) / self.duration
        arg = self.omega0 * t + 0.5 * k * t * t
        w = self.omega0 + k * t
        s, c = np.sin(arg), np.cos(arg)
        a = self.amplitude
        return self.offset + a * s, a * w * c, a * (k * c - w * w * s)


@dataclass(frozen=True)
class NoiseModel:
    """Additive white noise and constant gyro bias; all zero by default."""

    accel_std: float = 0.0
    gyro_std: float = 0.0
    gyro_bias: tuple[float, float, float] = (0.0, 0.0, 0.0)
    seed: int | None = 0

    def apply(self, accel: np.ndarray, gyro: np.ndarray, rng: np.random.Generator | None = None):
        rng = rng if rng is not None else np.random.default_rng(self.seed)
        accel = accel.copy()
        gyro = gyro + np.asarray(self.gyro_bias, dtype=float)
        if self.accel_std:
            accel += rng.normal(0.0, self.accel_std, accel.shape)
        if self.gyro_std:
            gyro += rng.normal(0.0, self.gyro_std, gyro.shape)
        return accel, gyro


@dataclass
class TrajectorySamples:
    """Output of :func:`sample_trajectory`: measurements plus true Euler angles."""

    imu: ImuSeries
    truth: np.ndarray  # (N, 3) roll, pitch, yaw
    phi_dot: np.ndarray = field(repr=False)
    phi_ddot: np.ndarray = field(repr=False)


def time_grid(t0: float, t1: float, dt: float) -> np.ndarray:
    if not t1 > t0:
        raise ValueError("t1 must exceed t0")
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    n = int(math.floor((t1 - t0) / dt + 1e-9)) + 1
    return t0 + dt * np.arange(n)


def sample_trajectory(
    cfg: PendulumConfig,
    traj: RollTrajectory,
    t0: float,
    t1: float,
    dt: float,
    noise: NoiseModel | None = None,
) -> TrajectorySamples:
    """Sample ``traj`` uniformly on ``[t0, t1]`` and synthesize IMU readings.

    The series has ``floor((t1 - t0) / dt) + 1`` samples.
    """
    t = time_grid(t0, t1, dt)
    phi, phi_dot, phi_ddot = traj(t)
    accel, gyro = measure_array(cfg, phi, phi_dot, phi_ddot)
    if noise is not None:
        accel, gyro = noise.apply(accel, gyro)
    truth = np.zeros((t.shape[0], 3))
    truth[:, 0] = wrap_angle(phi)
    return TrajectorySamples(ImuSeries(t, accel, gyro), truth, phi_dot, phi_ddot)
