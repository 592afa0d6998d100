"""Frequency response of the nonlinear estimators measured by simulation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .._backend import kernels
from ..errors import NoConvergence
from ..filters import FILTER_KINDS, mahony_gains
from ..imu_model import PendulumConfig, Sinusoid, measure_array
from ..quaternion import Quaternion, wrap_angle
from .tf import OperatingPoint

CHUNK = 200_000
# fitted amplitudes below this fraction of the input count as a perfect notch
NOTCH_FLOOR = 1e-3


@dataclass(frozen=True)
class FreqPoint:
    """Measured gain, phase (rad) and RMS fit residual (rad) at ``omega``."""

    omega: float
    gain: float
    phase: float
    residual: float

    @property
    def complex_gain(self) -> complex:
        return self.gain * complex(math.cos(self.phase), math.sin(self.phase))


def fit_sinusoid(t: np.ndarray, y: np.ndarray, omega: float):
    """Least-squares ``y ≈ a·sin(ωt) + b·cos(ωt) + c``; returns ``(a, b, c, rms_residual)``."""
    X = np.column_stack([np.sin(omega * t), np.cos(omega * t), np.ones_like(t)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    res = y - X @ coef
    return float(coef[0]), float(coef[1]), float(coef[2]), float(np.sqrt(np.mean(res * res)))


def _roll(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    return np.arctan2(w * x + y * z, 0.5 - x * x - y * y)


def simulate_roll_deviation(kind: str, params: Mapping[str, float] | None, op: OperatingPoint,
                            omega: float, amplitude: float, dt: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Estimated roll deviation under ``phi = phi_op + A·sin(ωt)``, sampled every ``dt``.

    The filter starts at the true attitude.  Samples are generated and
    filtered in chunks so memory stays bounded for long runs.
    """
    if kind not in FILTER_KINDS:
        raise ValueError(f"unknown filter kind {kind!r}")
    params = dict(params or {})
    cfg = PendulumConfig(op.l, op.g)
    traj = Sinusoid(amplitude, omega, offset=op.phi_op)
    t_all = dt * np.arange(n)
    out = np.empty(n)
    q = Quaternion.from_roll(op.phi_op).as_array()
    bias = np.zeros(3)
    gains = mahony_gains(params) if kind == "mahony" else None
    beta = float(params.get("beta", 0.1))
    project = bool(params.get("project", True))
    for start in range(0, n, CHUNK):
        t = t_all[start:start + CHUNK]
        accel, gyro = measure_array(cfg, *traj(t))
        if kind == "atan2":
            roll = np.arctan2(accel[:, 1], accel[:, 2])
        else:
            h = np.full(t.shape[0], dt)
            if start == 0:
                h[0] = 0.0
            q_out = np.empty((t.shape[0], 4))
            if kind == "mahony":
                b_out = np.empty((t.shape[0], 3))
                kernels.mahony_series(q, bias, accel, gyro, h, gains.kp, gains.ki, q_out, b_out)
                bias = b_out[-1].copy()
            else:
                kernels.madgwick_series(q, accel, gyro, h, beta, project, q_out)
            q = q_out[-1].copy()
            roll = _roll(q_out)
        out[start:start + CHUNK] = wrap_angle(roll - op.phi_op)
    return t_all, out


def empirical_freq_response(kind: str, params: Mapping[str, float] | None, op: OperatingPoint, omega: float,
                            amplitude: float = 1e-3, periods: int = 40, dt: float | None = None,
                            steps_per_period: int = 2000, max_dt: float = 1e-3) -> FreqPoint:
    """Gain and phase of the estimated roll relative to a small roll sinusoid.

    The fit uses the last half of ``periods`` input periods.

    Parameters
    ----------
    kind : {"atan2", "mahony", "madgwick"}
    params : mapping
        Filter parameters as for :func:`imuzeros.filters.estimate_series`.
    op : OperatingPoint
    omega : float
        Excitation frequency in rad/s.
    amplitude : float
        Excitation amplitude in rad, at most 0.01.
    dt : float, optional
        Sample period; ``min(max_dt, 2π / (omega * steps_per_period))`` by default.

    Raises
    ------
    NoConvergence
        If the RMS residual of the fit exceeds 10 % of the fitted amplitude
        (amplitudes below ``1e-3·A`` are treated as ``1e-3·A``).
    """
    if not omega > 0.0:
        raise ValueError("omega must be positive")
    if not 0.0 < amplitude <= 0.01:
        raise ValueError("amplitude must lie in (0, 0.01] rad")
    if periods < 40:
        raise ValueError("need at least 40 periods (20 fitted)")
    period = 2.0 * math.pi / omega
    if dt is None:
        dt = min(max_dt, period / steps_per_period)
    n = int(math.ceil(periods * period / dt)) + 1
    t, y = simulate_roll_deviation(kind, params, op, omega, amplitude, dt, n)
    keep = t >= 0.5 * t[-1]
    a, b, _, rms = fit_sinusoid(t[keep], y[keep], omega)
    fitted = math.hypot(a, b)
    if rms > 0.1 * max(fitted, NOTCH_FLOOR * amplitude):
        raise NoConvergence(f"sinusoid fit residual {rms:.3g} rad vs amplitude {fitted:.3g} rad at omega={omega}")
    return FreqPoint(omega, fitted / amplitude, math.atan2(b, a), rms)
