import math
from dataclasses import replace

import numpy as np
import pytest

from imuzeros.closed_loop import (
    DEFAULT_CONFIG,
    CascadedController,
    ClosedLoopConfig,
    ImuPlacement,
    ReactionWheelPlant,
    SwitchSchedule,
    closed_loop_margin,
    oscillation_metric,
    oscillation_ratio,
    plant_derivative,
    run_closed_loop,
)
from imuzeros.errors import Diverged
from imuzeros.imu_model import NoiseModel

PLANT = DEFAULT_CONFIG.plant
CTRL = DEFAULT_CONFIG.controller
QUIET = NoiseModel()


def short_config(**kw):
    base = dict(schedule=SwitchSchedule(((0.0, "lower"), (3.0, "upper"))), t_end=6.0)
    base.update(kw)
    return replace(DEFAULT_CONFIG, **base)


def test_upright_rest_is_equilibrium():
    assert np.all(plant_derivative(PLANT, [0.0, 0.0, 0.0], 0.0) == 0.0)


def test_gravity_pulls_away_from_upright():
    assert plant_derivative(PLANT, [0.01, 0.0, 0.0], 0.0)[1] > 0.0
    assert plant_derivative(PLANT, [-0.01, 0.0, 0.0], 0.0)[1] < 0.0


def test_positive_current_pushes_body_back_and_spins_wheel_up():
    _, phi_ddot, omega_dot = plant_derivative(PLANT, [0.0, 0.0, 0.0], 1.0)
    assert phi_ddot < 0.0 < omega_dot


def test_wheel_torque_balance():
    # the motor torque acts on body and rotor in opposite directions
    kt = PLANT.torque_constant
    _, phi_ddot, omega_dot = plant_derivative(PLANT, [0.0, 0.0, 0.0], 2.0)
    assert PLANT.body_inertia * phi_ddot == pytest.approx(-kt * 2.0)
    assert PLANT.wheel_inertia * (phi_ddot + omega_dot) == pytest.approx(kt * 2.0)


def test_linearized_plant_matches_jacobian():
    A, B = PLANT.linearized()
    x0 = np.zeros(3)
    h = 1e-7
    J = np.column_stack([(plant_derivative(PLANT, x0 + h * e, 0.0) - plant_derivative(PLANT, x0 - h * e, 0.0)) / (2 * h)
                         for e in np.eye(3)])
    assert np.allclose(A, J, atol=1e-6)
    assert np.allclose(B, plant_derivative(PLANT, x0, 1.0), atol=1e-12)


def test_open_loop_has_one_unstable_mode():
    eig = np.linalg.eigvals(PLANT.linearized()[0])
    assert sum(e.real > 0 for e in eig) == 1
    mgh = PLANT.mass * PLANT.g * PLANT.com_height
    # the wheel barely loads the falling mode: growth rate close to sqrt(mgh / J)
    assert max(eig.real) == pytest.approx(math.sqrt(mgh / PLANT.body_inertia), rel=0.05)


@pytest.mark.parametrize("bad", [dict(body_inertia=0.0), dict(mass=-1.0), dict(body_friction=-0.1)])
def test_plant_validation(bad):
    with pytest.raises(ValueError):
        ReactionWheelPlant(**bad)


def test_controller_validation_and_saturation():
    with pytest.raises(ValueError):
        CascadedController(current_limit=0.0)
    with pytest.raises(ValueError):
        CascadedController(kp_roll=math.inf)
    assert CTRL.current(1.0, 0.0, 0.0, 0.0) == CTRL.current_limit
    assert CTRL.current(-1.0, 0.0, 0.0, 0.0) == -CTRL.current_limit


def test_controller_gain_vector_matches_law():
    rng = np.random.default_rng(0)
    for x in rng.normal(scale=1e-3, size=(20, 4)):
        assert CTRL.current(*x) == pytest.approx(CTRL.feedback_gains() @ x, rel=1e-12)


def test_schedule():
    s = SwitchSchedule()
    assert [s.active(t) for t in (0.0, 9.999, 10.0, 19.0, 25.0)] == ["lower", "lower", "upper", "upper", "lower"]
    with pytest.raises(ValueError):
        SwitchSchedule(((1.0, "lower"),))
    with pytest.raises(ValueError):
        SwitchSchedule(((0.0, "lower"), (5.0, "upper"), (5.0, "lower")))


def test_default_placements():
    lower, upper = DEFAULT_CONFIG.placements
    assert (lower.label, lower.l, upper.label, upper.l) == ("lower", 0.12, "upper", 0.4)
    assert lower.accel_offset == -upper.accel_offset == pytest.approx(-0.005)


@pytest.mark.parametrize("phi0", [-0.05, -0.01, 0.01, 0.05])
def test_true_state_feedback_stabilizes(phi0):
    cfg = replace(DEFAULT_CONFIG, phi0=phi0, noise=QUIET, t_end=15.0)
    r = run_closed_loop(cfg, "mahony", {"kp": 1.0}, true_state_feedback=True)
    assert not r.diverged
    assert abs(r.phi[-1]) < 1e-6 * abs(phi0)
    assert abs(r.wheel_speed[-1]) < 1e-4 * abs(phi0)  # the wheel PI loop spins the rotor back down


def test_true_state_loop_is_stable():
    assert closed_loop_margin(PLANT, CTRL, None).stable


def test_idle_filter_does_not_touch_the_plant():
    cfg = short_config()
    a = run_closed_loop(cfg, "mahony", {"kp": 2.2, "ki": 1.0}, idle_params={"kp": 0.5, "ki": 0.0}, seed=3)
    b = run_closed_loop(cfg, "mahony", {"kp": 2.2, "ki": 1.0}, idle_params={"kp": 30.0, "ki": 2.0}, seed=3)
    for name in ("phi", "phi_dot", "wheel_speed", "current"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    # the lower IMU is idle after the switch, so only its shown estimate differs there
    late = a.t >= 3.0
    assert not np.array_equal(a.phi_hat[late, 0], b.phi_hat[late, 0])
    assert np.array_equal(a.phi_hat[late, 1], b.phi_hat[late, 1])


def test_runs_are_reproducible_per_seed():
    cfg = short_config(t_end=2.0)
    a = run_closed_loop(cfg, "madgwick", {"beta": 0.05}, seed=7)
    b = run_closed_loop(cfg, "madgwick", {"beta": 0.05}, seed=7)
    c = run_closed_loop(cfg, "madgwick", {"beta": 0.05}, seed=8)
    assert np.array_equal(a.phi, b.phi) and not np.array_equal(a.phi, c.phi)


def test_calibration_offset_biases_accel_roll():
    cfg = short_config(noise=QUIET, t_end=0.5)
    r = run_closed_loop(cfg, "atan2", None, true_state_feedback=True)
    # at rest upright the accel-only roll equals the offset of each placement
    assert r.phi_hat[0] == pytest.approx([-0.005, 0.005], abs=1e-12)


def test_fall_is_flagged():
    cfg = replace(DEFAULT_CONFIG, controller=CascadedController(kp_roll=-10.0), phi0=0.02, t_end=10.0)
    r = run_closed_loop(cfg, "mahony", {"kp": 1.0}, true_state_feedback=True)
    assert r.diverged and r.t_diverged < 10.0
    assert abs(r.phi[-1]) > math.pi / 4
    assert oscillation_metric(r, 0.0, 10.0) == math.inf
    with pytest.raises(Diverged):
        r.raise_if_diverged()


def test_run_validation():
    with pytest.raises(ValueError):
        run_closed_loop(DEFAULT_CONFIG, "kalman")
    bad = replace(DEFAULT_CONFIG, schedule=SwitchSchedule(((0.0, "middle"),)))
    with pytest.raises(ValueError):
        run_closed_loop(bad, "atan2")


def test_quiet_baseline_ratio():
    cfg = replace(DEFAULT_CONFIG, noise=QUIET, t_end=21.0, placements=(
        ImuPlacement("lower", 0.12), ImuPlacement("upper", 0.4)))
    r = run_closed_loop(cfg, "mahony", {"kp": 1.0}, true_state_feedback=True)
    assert math.isnan(oscillation_ratio(r))


def test_high_gain_upper_imu_oscillates_then_recovers():
    r = run_closed_loop(DEFAULT_CONFIG, "mahony", {"kp": 10.0, "ki": 1.0}, seed=1)
    r.raise_if_diverged()
    base = oscillation_metric(r, 2.0, 10.0)
    assert oscillation_metric(r, 12.0, 20.0) >= 5.0 * base
    assert oscillation_metric(r, 24.0, 30.0) < 2.0 * base


# --- linearized margins -----------------------------------------------------

@pytest.mark.parametrize("params", [{"kp": 1.0, "ki": 0.0}, {"kp": 10.0, "ki": 1.0}])
def test_margin_without_lever_arm_matches_true_state(params):
    ref = np.sort_complex(closed_loop_margin(PLANT, CTRL, None).eigenvalues)
    rep = closed_loop_margin(PLANT, CTRL, 0.0, "mahony", params)
    assert rep.filter_tf.order == (0, 0)
    assert rep.spectral_abscissa == pytest.approx(max(ref.real), rel=1e-9)


def test_margin_reports_cancelled_integrator_pole():
    rep = closed_loop_margin(PLANT, CTRL, ImuPlacement.upper(), "mahony", {"kp": 2.2, "ki": 0.0})
    assert any(abs(c) < 1e-12 for c in rep.cancelled)
    assert rep.filter_tf.order == (2, 1)


@pytest.mark.parametrize("kp", [1.0, 2.2, 10.0])
def test_margin_non_decreasing_in_lever_arm(kp):
    a = [closed_loop_margin(PLANT, CTRL, l, "mahony", {"kp": kp, "ki": 0.0}).spectral_abscissa for l in (0.0, 0.12, 0.4)]
    assert a[0] <= a[1] + 1e-12 and a[1] <= a[2] + 1e-12


def test_margin_non_decreasing_in_gain_far_from_axis():
    a = [closed_loop_margin(PLANT, CTRL, 0.4, "mahony", {"kp": kp, "ki": 0.0}).spectral_abscissa for kp in (1.0, 2.2, 10.0)]
    assert a[0] <= a[1] <= a[2]
    assert a[1] < 0.0 < a[2]


@pytest.mark.parametrize("kp, stable", [(2.2, True), (10.0, False)])
def test_upper_imu_with_integrator(kp, stable):
    assert closed_loop_margin(PLANT, CTRL, ImuPlacement.upper(), "mahony", {"kp": kp, "ki": 1.0}).stable is stable


def test_lower_imu_stays_stable_at_high_gain():
    assert closed_loop_margin(PLANT, CTRL, ImuPlacement.lower(), "mahony", {"kp": 10.0, "ki": 1.0}).stable


def test_accel_only_feedback_from_upper_imu_is_unstable():
    assert closed_loop_margin(PLANT, CTRL, ImuPlacement.lower(), "atan2").stable
    assert not closed_loop_margin(PLANT, CTRL, ImuPlacement.upper(), "atan2").stable
