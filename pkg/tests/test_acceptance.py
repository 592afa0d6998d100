"""Acceptance criteria, one test each, every check at its stated tolerance.

 1. accelerometer-only zeros and their locus over the operating angle
 2. closed-form Mahony transfer function against the state-space reduction
 3. Mahony zeros: high-gain limit and the single right-half-plane zero
 4. Madgwick sliding surface equals the accelerometer-only map
 5. simulated frequency responses against the analytic ones
 6. filter invariants: norm drift, decoupling, gradient, bias rejection
 7. closed-loop oscillation ordering and linearized margin monotonicity
 8. replay harness: exact CSV round trip and the gain ordering on fast motion

Each test prints a PASS/FAIL line; all lines are repeated in the terminal
summary.
"""
import math

import numpy as np

from imuzeros.analysis import (
    OperatingPoint,
    atan_tf,
    atan_zeros,
    default_kp_grid,
    empirical_freq_response,
    freq_response,
    madgwick_sliding_tf,
    mahony_tf,
    mahony_zeros,
    zero_locus_atan,
)
from imuzeros.analysis.state_space import mahony_tf_state_space
from imuzeros.closed_loop import DEFAULT_CONFIG, closed_loop_margin, oscillation_ratio, run_closed_loop
from imuzeros.errors import NoConvergence
from imuzeros.filters import MahonyGains, estimate_series, madgwick_gradient, run_madgwick, run_mahony
from imuzeros.imu_model import Chirp, Constant, ImuSeries, NoiseModel, PendulumConfig, Sinusoid, sample_trajectory
from imuzeros.quaternion import Quaternion, quat_to_euler
from imuzeros.replay import evaluate, fast_motion_dataset, load_csv, save_csv, synthetic_dataset


def test_criterion_1_atan_zeros(criterion):
    c = criterion(1, "accelerometer-only zeros and locus", 1.0)
    z = atan_zeros(OperatingPoint(0.0, 1.0))
    c.check(len(z) == 2 and abs(z[0] - 1) <= 1e-12 and abs(z[1] + 1) <= 1e-12, f"l=1, phi=0 gives {z}")
    z = atan_zeros(OperatingPoint(math.pi, 1.0))
    c.check(len(z) == 2 and abs(z[0] - 1j) <= 1e-12 and abs(z[1] + 1j) <= 1e-12, f"l=1, phi=pi gives {z}")
    grid = np.concatenate([np.linspace(0.0, math.pi, 181), [math.pi / 2]])
    for phi, zs in zero_locus_atan(1.0, grid):
        if abs(phi - math.pi / 2) < 1e-12:
            c.check(zs == (), f"zeros at pi/2: {zs}")
        elif phi < math.pi / 2:
            c.check(len(zs) == 2 and all(v.imag == 0 for v in zs) and zs[0] == -zs[1] and zs[0].real > 0,
                    f"not a real symmetric pair at phi={phi}: {zs}")
        else:
            c.check(len(zs) == 2 and all(v.real == 0 for v in zs) and zs[0] == -zs[1] and zs[0].imag > 0,
                    f"not an imaginary pair at phi={phi}: {zs}")
    c.finish()


def test_criterion_2_mahony_tf_identity(criterion):
    c = criterion(2, "closed-form Mahony TF equals state-space reduction", 5.0)
    rng = np.random.default_rng(12345)
    worst = 0.0
    for _ in range(100):
        op = OperatingPoint(rng.uniform(0.0, math.pi), rng.uniform(0.0, 2.0))
        gains = MahonyGains(10 ** rng.uniform(-1.0, 1.5), 10 ** rng.uniform(-1.0, 1.0))
        closed = mahony_tf(op, gains).normalized()
        reduced = mahony_tf_state_space(op, gains).normalized()
        if len(closed.num) != len(reduced.num) or len(closed.den) != len(reduced.den):
            c.check(False, f"order mismatch at {op}, {gains}")
            continue
        err = max(np.max(np.abs(np.subtract(closed.num, reduced.num))),
                  np.max(np.abs(np.subtract(closed.den, reduced.den))))
        worst = max(worst, err)
    c.check(worst <= 1e-10, f"max coefficient difference {worst:.2e}")
    for kp, ki, l in [(1.0, 1.0, 1.0), (10.0, 1.0, 0.4), (2.2, 0.3, 2.0)]:
        tf = mahony_tf(OperatingPoint(math.pi / 2, l), MahonyGains(kp, ki))
        c.check(tf.num == tf.den, f"numerator != denominator at pi/2: {tf}")
    c.note(f"max coefficient difference {worst:.1e}")
    c.finish()


def test_criterion_3_mahony_zero_limits(criterion):
    c = criterion(3, "Mahony zero limits and single RHP zero", 1.0)
    z = sorted(v.real for v in mahony_zeros(OperatingPoint(0.0, 1.0), 1e6))
    c.check(abs(z[0] + 1) <= 1e-4 and abs(z[1] - 1) <= 1e-4, f"kp=1e6 zeros {z}")
    rng = np.random.default_rng(7)
    phis = np.concatenate([np.linspace(0.0, math.pi / 2, 60, endpoint=False), rng.uniform(0, math.pi / 2, 40)])
    kps = np.concatenate([default_kp_grid(), 10 ** rng.uniform(-4, 6, 60)])
    count = 0
    for l in (0.12, 1.0):
        for phi in phis:
            op = OperatingPoint(float(phi), l)
            for kp in kps:
                n_rhp = sum(v.real > 0 for v in mahony_zeros(op, float(kp)))
                count += 1
                if n_rhp != 1:
                    c.check(False, f"{n_rhp} RHP zeros at l={l}, phi={phi}, kp={kp}")
    c.note(f"{count} (l, phi, kp) cases with exactly one RHP zero")
    c.finish()


def test_criterion_4_sliding_surface(criterion):
    c = criterion(4, "sliding-surface TF equals accelerometer-only TF", 1.0)
    rng = np.random.default_rng(99)
    for _ in range(50):
        op = OperatingPoint(rng.uniform(0.0, math.pi), rng.uniform(0.0, 3.0), rng.choice([1.0, 9.81]))
        a, b = madgwick_sliding_tf(op), atan_tf(op)
        c.check(a.num == b.num and a.den == b.den, f"{a} != {b} at {op}")
    c.finish()


def test_criterion_5_frequency_response(criterion):
    c = criterion(5, "simulated vs analytic frequency response", 60.0)
    omegas = (0.1, 0.5, 1.0, 2.0, 10.0)
    phis = (0.0, math.pi / 4, 3 * math.pi / 4, math.pi)
    cases = [("atan2", {}), ("mahony", {"kp": 1.0, "ki": 0.0}), ("mahony", {"kp": 10.0, "ki": 0.0}),
             ("madgwick", {"beta": 50.0})]
    worst_gain = worst_phase = 0.0
    notch = None
    for kind, params in cases:
        for phi in phis:
            op = OperatingPoint(phi, 1.0)
            tf = mahony_tf(op, MahonyGains(params["kp"], params["ki"])) if kind == "mahony" else atan_tf(op)
            for omega in omegas:
                g = freq_response(tf, omega)
                try:
                    p = empirical_freq_response(kind, params, op, omega, 1e-3)
                except NoConvergence as exc:
                    c.check(False, f"{kind} phi={phi:.3f} w={omega}: {exc}")
                    continue
                if abs(g) < 1e-9:
                    # exact notch: phase is undefined, the gain must vanish
                    c.check(p.gain < 0.05, f"{kind} notch gain {p.gain:.3g} at phi={phi:.3f}, w={omega}")
                    if kind == "atan2":
                        notch = p.gain
                    continue
                gain_err = abs(p.gain - abs(g)) / abs(g)
                phase_err = math.degrees(abs(np.angle(p.complex_gain / g)))
                worst_gain, worst_phase = max(worst_gain, gain_err), max(worst_phase, phase_err)
                c.check(gain_err <= 0.02 and phase_err <= 2.0,
                        f"{kind} {params} phi={phi:.3f} w={omega}: gain {p.gain:.4g} vs {abs(g):.4g}, "
                        f"phase error {phase_err:.2f} deg")
    c.check(notch is not None and notch < 0.05, f"notch at phi=pi, w=1: {notch}")
    c.note(f"worst gain error {100 * worst_gain:.2f}%, worst phase error {worst_phase:.2f} deg, notch gain {notch:.1e}")
    c.finish()


def test_criterion_6_filter_invariants(criterion):
    c = criterion(6, "filter invariants", 30.0)
    rng = np.random.default_rng(6)
    n = 1_000_000
    t = np.arange(n) * 1e-3
    accel = np.tile([0.0, 0.0, 1.0], (n, 1)) + 0.05 * rng.normal(size=(n, 3))
    series = ImuSeries(t, accel, rng.normal(size=(n, 3)))
    q, _ = run_mahony(series, MahonyGains(2.0, 0.1), Quaternion.identity())
    drift_mahony = float(np.max(np.abs(np.linalg.norm(q, axis=1) - 1.0)))
    q = run_madgwick(series, 0.1, Quaternion.identity())
    drift_madgwick = float(np.max(np.abs(np.linalg.norm(q, axis=1) - 1.0)))
    c.check(drift_mahony < 1e-9 and drift_madgwick < 1e-9, f"norm drift {drift_mahony:.1e}, {drift_madgwick:.1e}")

    leak = 0.0
    for traj in (Sinusoid(0.8, 3.0, 0.2), Chirp(0.5, 0.5, 8.0, 10.0, -0.3)):
        for l in (0.0, 0.4):
            s = sample_trajectory(PendulumConfig(l, 9.81), traj, 0.0, 10.0, 1e-3).imu
            for kind, params in (("mahony", {"kp": 5.0, "ki": 0.5}), ("madgwick", {"beta": 0.2})):
                leak = max(leak, float(np.max(np.abs(estimate_series(kind, params, s)[:, 1:]))))
    c.check(leak < 1e-6, f"pitch/yaw leak {leak:.2e} rad")

    qs = rng.normal(size=(1000, 4))
    qs /= np.linalg.norm(qs, axis=1, keepdims=True)
    accs = rng.normal(size=(1000, 3))
    accs /= np.linalg.norm(accs, axis=1, keepdims=True)

    def cost(qv, a):
        w, x, y, z = qv
        f = np.array([2 * (x * z - w * y), 2 * (y * z + w * x), w * w - x * x - y * y + z * z]) - a
        return float(f @ f)

    worst = 0.0
    h = 1e-6
    for qv, a in zip(qs, accs):
        g = madgwick_gradient(Quaternion(*qv), a)
        fd = np.array([(cost(qv + h * e, a) - cost(qv - h * e, a)) / (2 * h) for e in np.eye(4)])
        worst = max(worst, float(np.linalg.norm(g - fd) / max(np.linalg.norm(g), 1e-12)))
    c.check(worst < 1e-6, f"gradient relative error {worst:.2e}")

    s = sample_trajectory(PendulumConfig(0.0), Constant(0.0), 0.0, 30.0, 1e-3, NoiseModel(gyro_bias=(0.01, 0, 0))).imu
    q, _ = run_mahony(s, MahonyGains(1.0, 1.0), Quaternion.identity())
    residual = abs(quat_to_euler(Quaternion(*q[-1])).roll)
    c.check(residual < 1e-4, f"roll error after 30 s of gyro bias {residual:.2e} rad")
    c.note(f"drift {max(drift_mahony, drift_madgwick):.1e}, leak {leak:.1e}, gradient {worst:.1e}, "
           f"bias residual {residual:.1e}")
    c.finish()


def test_criterion_7_closed_loop(criterion):
    c = criterion(7, "closed-loop ordering and margin monotonicity", 120.0)
    ratios = {}
    for label, kind, params in [("mahony kp=10", "mahony", {"kp": 10.0, "ki": 1.0}),
                                ("mahony kp=2.2", "mahony", {"kp": 2.2, "ki": 1.0}),
                                ("madgwick beta=0.1", "madgwick", {"beta": 0.1}),
                                ("madgwick beta=0.01", "madgwick", {"beta": 0.01})]:
        result = run_closed_loop(DEFAULT_CONFIG, kind, params)
        c.check(not result.diverged, f"{label} fell at t={result.t_diverged}")
        ratios[label] = oscillation_ratio(result)
    c.check(ratios["mahony kp=10"] >= 5.0, f"kp=10 ratio {ratios['mahony kp=10']:.2f} < 5")
    c.check(ratios["mahony kp=2.2"] < 2.0, f"kp=2.2 ratio {ratios['mahony kp=2.2']:.2f} >= 2")
    c.check(ratios["madgwick beta=0.1"] >= 5.0, f"beta=0.1 ratio {ratios['madgwick beta=0.1']:.2f} < 5")
    c.check(ratios["madgwick beta=0.01"] < 2.0, f"beta=0.01 ratio {ratios['madgwick beta=0.01']:.2f} >= 2")

    plant, ctrl = DEFAULT_CONFIG.plant, DEFAULT_CONFIG.controller

    def abscissa(l, kp):
        return closed_loop_margin(plant, ctrl, l, "mahony", {"kp": kp, "ki": 0.0}).spectral_abscissa

    for kp in (1.0, 2.2, 10.0):
        a = [abscissa(l, kp) for l in (0.0, 0.12, 0.4)]
        c.check(a[0] <= a[1] <= a[2], f"abscissa not non-decreasing in l at kp={kp}: {np.round(a, 4)}")
    a = [abscissa(0.4, kp) for kp in (1.0, 2.2, 10.0)]
    c.check(a[0] <= a[1] <= a[2], f"abscissa not non-decreasing in kp at l=0.4: {np.round(a, 4)}")
    c.note("ratios " + ", ".join(f"{k} {v:.2f}" for k, v in ratios.items()))
    c.finish()


def test_criterion_8_replay(criterion, tmp_path):
    c = criterion(8, "replay round trip and gain ordering", 30.0)
    for name, ds in [("sinusoid", synthetic_dataset(0.4, Sinusoid(0.3, 2.0, 0.1), 5.0, 0.01, g=9.81,
                                                     noise=NoiseModel(accel_std=0.01, gyro_std=0.01, seed=1))),
                     ("fast", fast_motion_dataset(seed=3, t_end=5.0))]:
        path = tmp_path / f"{name}.csv"
        save_csv(path, ds)
        back = load_csv(path)
        exact = all(np.array_equal(getattr(back.imu, f), getattr(ds.imu, f)) for f in ("t", "accel", "gyro"))
        exact = exact and np.array_equal(back.truth_t, ds.truth_t) and np.array_equal(back.truth_q, ds.truth_q)
        c.check(exact, f"{name} round trip is not bit-exact")
    ds = fast_motion_dataset(seed=0)
    low = evaluate(ds, "mahony", {"kp": 1.0}).rmse[0]
    high = evaluate(ds, "mahony", {"kp": 30.0}).rmse[0]
    c.check(low < high, f"roll RMSE kp=1 {low:.4g} not below kp=30 {high:.4g}")
    c.note(f"roll RMSE kp=1 {low:.4f} rad, kp=30 {high:.4f} rad")
    c.finish()
