"""Reaction-wheel inverted pendulum stabilized through an IMU attitude estimate.

Plant
-----
A rigid body pivots about the ground contact with roll ``phi`` (0 upright);
a reaction wheel with rotor inertia ``I_w`` spins at ``Omega`` relative to
the body and is driven by motor torque ``K_t·i``.  From the Lagrangian
``T = ½·J·phi_dot² + ½·I_w·(phi_dot + Omega)²``, ``V = m·g·h·cos(phi)``::

    J·phi_ddot      = m·g·h·sin(phi) - b_p·phi_dot - K_t·i + b_w·Omega
    I_w·(phi_ddot + Omega_dot) = K_t·i - b_w·Omega

``J`` is the body inertia about the pivot (wheel mass included, rotor spin
inertia excluded).

Controller
----------
A cascade: the outer PI loop on wheel speed sets a roll reference
``phi_ref = -(k_w·Omega + k_wi·∫Omega)``; the inner PD loop commands
``i = k_p·(phi_hat - phi_ref) + k_d·gyro_x``, clipped to the current limit.
The roll comes from the estimator of the active IMU, the rate from its
gyro, the wheel speed from an ideal encoder.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ._backend import kernels
from .analysis.tf import OperatingPoint, RationalTf
from .analysis.zeros import atan_tf, madgwick_sliding_tf, mahony_tf
from .errors import Diverged
from .filters import FILTER_KINDS, mahony_gains
from .imu_model import NoiseModel
from .quaternion import Quaternion

FALL_ANGLE = math.pi / 4


@dataclass(frozen=True)
class ReactionWheelPlant:
    """Rigid-body parameters in SI units."""

    body_inertia: float = 1.73     # kg·m², about the pivot
    wheel_inertia: float = 0.02    # kg·m², rotor about its spin axis
    mass: float = 15.0             # kg
    com_height: float = 0.17       # m
    torque_constant: float = 0.5   # N·m/A
    body_friction: float = 0.05    # N·m·s/rad
    wheel_friction: float = 1e-3   # N·m·s/rad
    g: float = 9.81                # m/s²

    def __post_init__(self):
        for name in ("body_inertia", "wheel_inertia", "mass", "com_height", "torque_constant", "g"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")
        if self.body_friction < 0.0 or self.wheel_friction < 0.0:
            raise ValueError("friction coefficients must be >= 0")

    def linearized(self) -> tuple[np.ndarray, np.ndarray]:
        """``(A, B)`` about upright at rest for state ``(phi, phi_dot, Omega)`` and input current."""
        J, Iw = self.body_inertia, self.wheel_inertia
        kg = self.mass * self.g * self.com_height
        bp, bw, kt = self.body_friction, self.wheel_friction, self.torque_constant
        row = np.array([kg, -bp, bw]) / J
        A = np.array([[0.0, 1.0, 0.0], row, -row + np.array([0.0, 0.0, -bw / Iw])])
        bphi = -kt / J
        B = np.array([0.0, bphi, kt / Iw - bphi])
        return A, B


def plant_derivative(plant: ReactionWheelPlant, state, current: float) -> np.ndarray:
    """``(phi_dot, phi_ddot, Omega_dot)`` for state ``(phi, phi_dot, Omega)``."""
    phi, phi_dot, omega = state
    torque = plant.torque_constant * current
    phi_ddot = (plant.mass * plant.g * plant.com_height * math.sin(phi) - plant.body_friction * phi_dot
                - torque + plant.wheel_friction * omega) / plant.body_inertia
    omega_dot = (torque - plant.wheel_friction * omega) / plant.wheel_inertia - phi_ddot
    return np.array([phi_dot, phi_ddot, omega_dot])


@dataclass(frozen=True)
class CascadedController:
    """Inner PD on roll (A/rad, A·s/rad), outer PI on wheel speed (rad·s/rad, rad/rad)."""

    kp_roll: float = 281.0
    kd_roll: float = 83.2
    kp_wheel: float = 1.0e-3
    ki_wheel: float = 7.7e-4
    current_limit: float = 20.0

    def __post_init__(self):
        vals = (self.kp_roll, self.kd_roll, self.kp_wheel, self.ki_wheel, self.current_limit)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("controller gains must be finite")
        if not self.current_limit > 0.0:
            raise ValueError("current limit must be positive")

    def feedback_gains(self) -> np.ndarray:
        """Unsaturated law as ``i = K · (phi_hat, gyro, Omega, ∫Omega)``."""
        k = self.kp_roll
        return np.array([k, self.kd_roll, k * self.kp_wheel, k * self.ki_wheel])

    def current(self, phi_hat: float, rate: float, wheel_speed: float, wheel_integral: float) -> float:
        ref = -(self.kp_wheel * wheel_speed + self.ki_wheel * wheel_integral)
        i = self.kp_roll * (phi_hat - ref) + self.kd_roll * rate
        return min(max(i, -self.current_limit), self.current_limit)


@dataclass(frozen=True)
class ImuPlacement:
    """IMU at height ``l`` (m) above the pivot with a calibration offset (rad).

    The offset rotates the measured specific force about the roll axis, so
    the accelerometer-derived roll is biased by exactly ``accel_offset``.
    """

    label: str
    l: float
    accel_offset: float = 0.0

    def __post_init__(self):
        if not self.l >= 0.0:
            raise ValueError("lever arm must be >= 0")

    @classmethod
    def upper(cls, l: float = 0.4, accel_offset: float = 0.005) -> ImuPlacement:
        return cls("upper", l, accel_offset)

    @classmethod
    def lower(cls, l: float = 0.12, accel_offset: float = -0.005) -> ImuPlacement:
        return cls("lower", l, accel_offset)


@dataclass(frozen=True)
class SwitchSchedule:
    """Which placement feeds the controller from each start time (s) on."""

    entries: tuple[tuple[float, str], ...] = ((0.0, "lower"), (10.0, "upper"), (20.0, "lower"))

    def __post_init__(self):
        entries = tuple((float(t), str(lbl)) for t, lbl in self.entries)
        if not entries or entries[0][0] != 0.0:
            raise ValueError("schedule must start at t = 0")
        if any(b[0] <= a[0] for a, b in zip(entries, entries[1:])):
            raise ValueError("schedule times must be strictly increasing")
        object.__setattr__(self, "entries", entries)

    def active(self, t: float) -> str:
        label = self.entries[0][1]
        for start, lbl in self.entries:
            if t >= start:
                label = lbl
        return label


@dataclass(frozen=True)
class ClosedLoopConfig:
    """Everything needed for a reproducible closed-loop run."""

    plant: ReactionWheelPlant = field(default_factory=ReactionWheelPlant)
    controller: CascadedController = field(default_factory=CascadedController)
    placements: tuple[ImuPlacement, ...] = field(default_factory=lambda: (ImuPlacement.lower(), ImuPlacement.upper()))
    schedule: SwitchSchedule = field(default_factory=SwitchSchedule)
    noise: NoiseModel = field(default_factory=lambda: NoiseModel(accel_std=0.01, gyro_std=0.002))
    dt: float = 1e-3
    t_end: float = 30.0
    phi0: float = 0.0


DEFAULT_CONFIG = ClosedLoopConfig()


@dataclass
class ClosedLoopResult:
    t: np.ndarray
    phi: np.ndarray
    phi_dot: np.ndarray
    wheel_speed: np.ndarray
    current: np.ndarray
    active: np.ndarray            # index into labels
    labels: tuple[str, ...]
    phi_hat: np.ndarray           # (N, n_imu)
    accel_y: np.ndarray           # (N, n_imu), normalized specific force, body y
    diverged: bool = False
    t_diverged: float | None = None

    def window(self, t0: float, t1: float) -> np.ndarray:
        return (self.t >= t0) & (self.t < t1)

    def raise_if_diverged(self) -> ClosedLoopResult:
        if self.diverged:
            raise Diverged(f"roll exceeded {FALL_ANGLE:.4f} rad at t = {self.t_diverged:.3f} s")
        return self


class _Estimator:
    """One IMU's filter, stepped one sample at a time."""

    def __init__(self, kind: str, params: Mapping[str, float], q0: Quaternion):
        self.kind = kind
        self.q = tuple(q0)
        self.bias = (0.0, 0.0, 0.0)
        if kind == "mahony":
            g = mahony_gains(params)
            self.kp, self.ki = g.kp, g.ki
        elif kind == "madgwick":
            self.beta = float(params.get("beta", 0.1))
            self.project = bool(params.get("project", True))
        self.roll = 2.0 * math.atan2(q0.x, q0.w)

    def update(self, ax, ay, az, gx, gy, gz, h):
        if self.kind == "atan2":
            self.roll = math.atan2(ay, az)
            return
        if self.kind == "mahony":
            r = kernels.mahony_step(*self.q, *self.bias, ax, ay, az, gx, gy, gz, self.kp, self.ki, h)
            self.q, self.bias = r[:4], r[4:]
        else:
            self.q = kernels.madgwick_step(*self.q, ax, ay, az, gx, gy, gz, self.beta, h, self.project)
        w, x, y, z = self.q
        self.roll = math.atan2(w * x + y * z, 0.5 - x * x - y * y)


def _rk4(plant: ReactionWheelPlant, s: np.ndarray, i: float, h: float) -> np.ndarray:
    k1 = plant_derivative(plant, s, i)
    k2 = plant_derivative(plant, s + 0.5 * h * k1, i)
    k3 = plant_derivative(plant, s + 0.5 * h * k2, i)
    k4 = plant_derivative(plant, s + h * k3, i)
    return s + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def run_closed_loop(config: ClosedLoopConfig, kind: str = "mahony", params: Mapping[str, float] | None = None,
                    idle_params: Mapping[str, float] | None = None, seed: int | None = None,
                    true_state_feedback: bool = False) -> ClosedLoopResult:
    """Simulate the loop with every IMU's filter running on its own stream.

    Parameters
    ----------
    config : ClosedLoopConfig
    kind : {"atan2", "mahony", "madgwick"}
    params : mapping
        Filter parameters for the IMU feeding the controller.
    idle_params : mapping, optional
        Parameters for filters while they are not in the loop; they never
        influence the plant.  Defaults to ``params``.
    seed : int, optional
        Overrides the noise seed of the config.
    true_state_feedback : bool
        Feed the true roll and rate to the controller instead.

    Notes
    -----
    Per step of length ``dt`` the controller uses the latest estimates and
    gyro samples, the current is held over the step, the plant advances by
    RK4, and each filter ingests the sample synthesized from the plant's
    roll, rate and roll acceleration at the sample time.  A roll beyond π/4
    stops the run and sets ``diverged``.
    """
    if kind not in FILTER_KINDS:
        raise ValueError(f"unknown filter kind {kind!r}")
    if not config.dt > 0.0 or not config.t_end > 0.0:
        raise ValueError("dt and t_end must be positive")
    params = dict(params or {})
    idle_params = dict(idle_params) if idle_params is not None else params
    plant, ctrl, dt = config.plant, config.controller, config.dt
    labels = tuple(p.label for p in config.placements)
    for _, lbl in config.schedule.entries:
        if lbl not in labels:
            raise ValueError(f"schedule refers to unknown placement {lbl!r}")

    n = int(math.floor(config.t_end / dt + 1e-9)) + 1
    t = dt * np.arange(n)
    active = np.array([labels.index(config.schedule.active(tk)) for tk in t])
    noise = config.noise
    root = np.random.SeedSequence(noise.seed if seed is None else seed)
    rngs = [np.random.default_rng(s) for s in root.spawn(len(labels))]
    acc_noise = [r.normal(0.0, noise.accel_std, (n, 3)) if noise.accel_std else np.zeros((n, 3)) for r in rngs]
    gyr_noise = [r.normal(0.0, noise.gyro_std, (n, 3)) + np.asarray(noise.gyro_bias) if noise.gyro_std
                 else np.zeros((n, 3)) + np.asarray(noise.gyro_bias) for r in rngs]
    rot = [(math.cos(p.accel_offset), math.sin(p.accel_offset)) for p in config.placements]

    q0 = Quaternion.from_roll(config.phi0)
    # the in-loop filter of each IMU and a twin with the idle parameters
    loop_est = [_Estimator(kind, params, q0) for _ in labels]
    idle_est = [_Estimator(kind, idle_params, q0) for _ in labels] if idle_params != params else loop_est

    phi_o, rate_o, wheel_o, cur_o = (np.full(n, np.nan) for _ in range(4))
    hat_o = np.full((n, len(labels)), np.nan)
    acc_o = np.full((n, len(labels)), np.nan)
    s = np.array([config.phi0, 0.0, 0.0])
    wheel_int = 0.0
    gyro_prev = [0.0] * len(labels)
    diverged, t_div = False, None
    for k in range(n):
        a = active[k]
        if true_state_feedback:
            i = ctrl.current(s[0], s[1], s[2], wheel_int)
        else:
            est = loop_est[a]
            gx = s[1] + gyr_noise[a][k, 0]
            i = ctrl.current(est.roll, gx, s[2], wheel_int)
        phi_ddot = plant_derivative(plant, s, i)[1]
        h = dt if k else 0.0
        for j, p in enumerate(config.placements):
            r = p.l / plant.g
            ay0 = math.sin(s[0]) - r * phi_ddot
            az0 = math.cos(s[0]) - r * s[1] * s[1]
            c, sn = rot[j]
            an = acc_noise[j][k]
            ax_ = an[0]
            ay_ = ay0 * c + az0 * sn + an[1]
            az_ = az0 * c - ay0 * sn + an[2]
            gn = gyr_noise[j][k]
            g = (s[1] + gn[0], gn[1], gn[2])
            loop_est[j].update(ax_, ay_, az_, *g, h)
            if idle_est is not loop_est:
                idle_est[j].update(ax_, ay_, az_, *g, h)
            norm = math.sqrt(ax_ * ax_ + ay_ * ay_ + az_ * az_)
            acc_o[k, j] = ay_ / norm if norm > 0.0 else 0.0
            shown = loop_est[j] if j == a else idle_est[j]
            hat_o[k, j] = shown.roll
        phi_o[k], rate_o[k], wheel_o[k], cur_o[k] = s[0], s[1], s[2], i
        if abs(s[0]) > FALL_ANGLE:
            diverged, t_div = True, float(t[k])
            break
        wheel_int += dt * s[2]
        s = _rk4(plant, s, i, dt)
    m = k + 1
    return ClosedLoopResult(t[:m], phi_o[:m], rate_o[:m], wheel_o[:m], cur_o[:m], active[:m], labels,
                            hat_o[:m], acc_o[:m], diverged, t_div)


def oscillation_metric(result: ClosedLoopResult, t0: float, t1: float) -> float:
    """Standard deviation of the true roll rate over ``[t0, t1)``; ``inf`` if the run fell before ``t1``."""
    if result.diverged and result.t_diverged < t1:
        return math.inf
    sel = result.window(t0, t1)
    if not sel.any():
        raise ValueError("empty window")
    return float(np.std(result.phi_dot[sel]))


def oscillation_ratio(result: ClosedLoopResult, test=(12.0, 20.0), baseline=(2.0, 10.0)) -> float:
    """Test-window metric over baseline-window metric; a quiet baseline gives ``inf`` (or ``nan`` if both are quiet)."""
    num, den = oscillation_metric(result, *test), oscillation_metric(result, *baseline)
    if den == 0.0:
        return math.inf if num > 0.0 else math.nan
    return num / den


def filter_tf(kind: str, params: Mapping[str, float] | None, l: float, g: float) -> RationalTf:
    """Linearized roll estimator about upright for a lever arm ``l``."""
    op = OperatingPoint(0.0, l, g)
    params = dict(params or {})
    if kind == "mahony":
        return mahony_tf(op, mahony_gains(params))
    if kind == "madgwick":
        return madgwick_sliding_tf(op)
    if kind == "atan2":
        return atan_tf(op)
    raise ValueError(f"unknown filter kind {kind!r}")


@dataclass(frozen=True)
class MarginReport:
    """Closed-loop eigenvalues plus the filter model used (after cancellations)."""

    eigenvalues: np.ndarray
    filter_tf: RationalTf
    cancelled: tuple[complex, ...] = ()

    @property
    def spectral_abscissa(self) -> float:
        return float(np.max(self.eigenvalues.real))

    @property
    def stable(self) -> bool:
        return self.spectral_abscissa < 0.0


def closed_loop_matrix(plant: ReactionWheelPlant, controller: CascadedController, tf: RationalTf | None) -> np.ndarray:
    """System matrix of the linearized loop; ``tf=None`` feeds back the true roll.

    States: ``(phi, phi_dot, Omega, ∫Omega, filter states...)``.  The filter
    is split as ``D0 + D1·s + D2·s² + C (sI - A_f)⁻¹ B_f`` driven by ``phi``;
    its ``D2`` term makes the current depend on ``phi_ddot``, an algebraic
    loop solved exactly.
    """
    Ap, Bp = plant.linearized()
    K = controller.feedback_gains()
    if tf is None:
        tf = RationalTf((1.0,), (1.0,))
    num = np.array(tf.num[::-1])
    den = np.array(tf.den[::-1])
    quo, rem = np.polydiv(num, den) if len(num) >= len(den) else (np.array([0.0]), num)
    quo = quo / 1.0
    d = np.zeros(3)
    d[: len(quo)] = quo[::-1][:3]
    if len(quo) > 3:
        raise ValueError("filter transfer function exceeds relative degree -2")
    nf = len(den) - 1
    lead = den[0]
    Af = np.zeros((nf, nf))
    Bf = np.zeros(nf)
    Cf = np.zeros(nf)
    if nf:
        # controllable canonical form of rem/den
        Af[:-1, 1:] = np.eye(nf - 1)
        Af[-1, :] = -den[::-1][:nf] / lead
        Bf[-1] = 1.0
        r = np.zeros(nf)
        rr = rem[::-1] / lead
        r[: min(nf, len(rr))] = rr[:nf]
        Cf = r
    n = 4 + nf
    # phi_ddot = a·x + b·i ; i = kx·x + K0·D2·phi_ddot
    a = np.zeros(n)
    a[:3] = Ap[1]
    b = Bp[1]
    kx = np.zeros(n)
    kx[0] = K[0] * d[0]
    kx[1] = K[0] * d[1] + K[1]
    kx[2] = K[2]
    kx[3] = K[3]
    kx[4:] = K[0] * Cf
    denom = 1.0 - K[0] * d[2] * b
    if abs(denom) < 1e-12:
        raise ZeroDivisionError("ill-posed algebraic loop through the filter feedthrough")
    i_row = (kx + K[0] * d[2] * a) / denom
    M = np.zeros((n, n))
    M[0, 1] = 1.0
    M[1, :3] = Ap[1]
    M[1] += Bp[1] * i_row
    M[2, :3] = Ap[2]
    M[2] += Bp[2] * i_row
    M[3, 2] = 1.0
    if nf:
        M[4:, 4:] = Af
        M[4:, 0] += Bf
    return M


def closed_loop_margin(plant: ReactionWheelPlant, controller: CascadedController, placement: ImuPlacement | float | None,
                       kind: str = "mahony", params: Mapping[str, float] | None = None) -> MarginReport:
    """Eigenvalues of plant, controller and linearized estimator about upright.

    ``placement=None`` bypasses the estimator (true-state feedback).  Exact
    pole-zero pairs of the estimator model (such as the common ``s`` factor
    when ``ki = 0``) are cancelled first and listed in the report.
    """
    if placement is None:
        tf = RationalTf((1.0,), (1.0,))
        return MarginReport(np.linalg.eigvals(closed_loop_matrix(plant, controller, None)), tf)
    l = placement.l if isinstance(placement, ImuPlacement) else float(placement)
    tf, cancelled = filter_tf(kind, params, l, plant.g).minreal()
    return MarginReport(np.linalg.eigvals(closed_loop_matrix(plant, controller, tf)), tf, tuple(cancelled))
