"""Command-line front end; every subcommand writes CSV.

Tables go to ``--output`` (stdout by default) and human-readable summaries
to stderr.  Exit codes: 0 success, 2 configuration error, 3 numerical
non-convergence, 4 I/O or parse error.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import math
import sys
from typing import Sequence

import numpy as np

from .analysis import (
    OperatingPoint,
    atan_tf,
    empirical_freq_response,
    freq_response,
    madgwick_sliding_tf,
    mahony_tf,
    zero_locus_atan,
    zero_locus_mahony,
)
from .analysis.zeros import mahony_zeros
from .closed_loop import DEFAULT_CONFIG, SwitchSchedule, oscillation_metric, run_closed_loop
from .errors import NoConvergence, ParseError, PoleOnAxis
from .filters import MahonyGains
from .imu_model import Constant, NoiseModel, Sinusoid
from .replay import evaluate, fast_motion_dataset, load_csv, save_csv, synthetic_dataset

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NO_CONVERGENCE = 3
EXIT_IO = 4

_KINDS = {"atan": "atan2", "atan2": "atan2", "mahony": "mahony", "madgwick": "madgwick"}


class ConfigError(Exception):
    pass


def parse_grid(text: str, log: bool) -> np.ndarray:
    """``start:stop:count`` as a linear or log-spaced grid."""
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"grid {text!r} must look like start:stop:count")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid {text!r} has a non-numeric field") from None
    if count < 1:
        raise argparse.ArgumentTypeError("grid count must be >= 1")
    if log:
        if not (start > 0.0 and stop > 0.0):
            raise argparse.ArgumentTypeError("log-spaced grid needs positive bounds")
        return np.geomspace(start, stop, count)
    return np.linspace(start, stop, count)


def _log_grid(text):
    return parse_grid(text, log=True)


def _lin_grid(text):
    return parse_grid(text, log=False)


def parse_schedule(text: str) -> SwitchSchedule:
    """``0:lower,10:upper,20:lower`` as a switch schedule."""
    try:
        entries = []
        for item in text.split(","):
            t, label = item.split(":")
            entries.append((float(t), label.strip()))
        return SwitchSchedule(tuple(entries))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad schedule {text!r}: {exc}") from None


@contextlib.contextmanager
def _open_output(path: str):
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _zero_cells(zs) -> list[str]:
    cells = []
    for k in range(2):
        if k < len(zs):
            cells += [_fmt(zs[k].real), _fmt(zs[k].imag)]
        else:
            cells += ["", ""]
    return cells


def _mahony_params(args) -> dict:
    return {"kp": args.kp, "ki": args.ki}


def _filter_params(kind: str, args) -> dict:
    if kind == "mahony":
        return _mahony_params(args)
    if kind == "madgwick":
        return {"beta": args.beta}
    return {}


def cmd_zeros(args) -> int:
    kind = _KINDS[args.filter]
    if kind == "madgwick":
        kind = "atan2"  # the sliding surface has the accelerometer-only zeros
    if kind == "atan2":
        if args.kp_grid is not None:
            raise ConfigError("--kp-grid applies to --filter mahony only")
        grid = args.phi_op_grid if args.phi_op_grid is not None else [args.phi_op]
        rows = zero_locus_atan(args.l, grid, args.g)
        var = "phi_op"
    elif args.kp_grid is not None:
        if args.phi_op_grid is not None:
            raise ConfigError("sweep either --kp-grid or --phi-op-grid, not both")
        rows = zero_locus_mahony(args.l, args.phi_op, args.kp_grid, args.g)
        var = "kp"
    else:
        if args.kp is None:
            raise ConfigError("--filter mahony needs --kp or --kp-grid")
        grid = args.phi_op_grid if args.phi_op_grid is not None else [args.phi_op]
        rows = [(float(phi), mahony_zeros(OperatingPoint(float(phi), args.l, args.g), args.kp)) for phi in grid]
        var = "phi_op"
    with _open_output(args.output) as fh:
        w = _writer(fh)
        w.writerow([var, "re_z1", "im_z1", "re_z2", "im_z2"])
        for value, zs in rows:
            w.writerow([_fmt(float(value)), *_zero_cells(zs)])
    return EXIT_OK


def cmd_bode(args) -> int:
    kind = _KINDS[args.filter]
    op = OperatingPoint(args.phi_op, args.l, args.g)
    if kind == "mahony":
        tf = mahony_tf(op, MahonyGains(args.kp, args.ki))
    elif kind == "madgwick":
        tf = madgwick_sliding_tf(op)
    else:
        tf = atan_tf(op)
    omegas = args.omega_grid if args.omega_grid is not None else args.omega
    params = _filter_params(kind, args)
    status = EXIT_OK
    with _open_output(args.output) as fh:
        w = _writer(fh)
        w.writerow(["omega", "analytic_gain", "analytic_phase", "empirical_gain", "empirical_phase"])
        for omega in omegas:
            omega = float(omega)
            try:
                g = freq_response(tf, omega)
                row = [_fmt(omega), _fmt(abs(g)), _fmt(math.atan2(g.imag, g.real))]
            except PoleOnAxis as exc:
                print(f"omega={omega}: {exc}", file=sys.stderr)
                row = [_fmt(omega), "", ""]
                status = EXIT_NO_CONVERGENCE
            if args.analytic_only:
                row += ["", ""]
            else:
                try:
                    p = empirical_freq_response(kind, params, op, omega, args.amplitude)
                    row += [_fmt(p.gain), _fmt(p.phase)]
                except NoConvergence as exc:
                    print(f"omega={omega}: {exc}", file=sys.stderr)
                    row += ["", ""]
                    status = EXIT_NO_CONVERGENCE
            w.writerow(row)
            fh.flush()
    return status


def cmd_closed_loop(args) -> int:
    from dataclasses import replace

    kind = _KINDS[args.filter]
    cfg = replace(DEFAULT_CONFIG, schedule=args.schedule, dt=args.dt, t_end=args.t_end, phi0=args.phi0)
    result = run_closed_loop(cfg, kind, _filter_params(kind, args), seed=args.seed,
                             true_state_feedback=args.true_state)
    labels = result.labels
    with _open_output(args.output) as fh:
        w = _writer(fh)
        w.writerow(["t", "phi", "phi_dot", "wheel_speed", "current", "active",
                    *(f"phi_hat_{lbl}" for lbl in labels), *(f"accel_y_{lbl}" for lbl in labels), "diverged"])
        flag = _fmt(result.diverged)
        for k in range(len(result.t)):
            w.writerow([_fmt(result.t[k]), _fmt(result.phi[k]), _fmt(result.phi_dot[k]),
                        _fmt(result.wheel_speed[k]), _fmt(result.current[k]), labels[result.active[k]],
                        *(_fmt(v) for v in result.phi_hat[k]), *(_fmt(v) for v in result.accel_y[k]), flag])
    if result.diverged:
        print(f"diverged at t={result.t_diverged:.3f} s", file=sys.stderr)
    elif args.t_end >= 20.0:
        base = oscillation_metric(result, 2.0, 10.0)
        test = oscillation_metric(result, 12.0, 20.0)
        ratio = test / base if base > 0 else math.inf
        print(f"std(phi_dot) [2,10) s = {base:.6g} rad/s, [12,20) s = {test:.6g} rad/s, ratio = {ratio:.4g}",
              file=sys.stderr)
    return EXIT_OK


def cmd_replay(args) -> int:
    kind = _KINDS[args.filter]
    dataset = load_csv(args.dataset)
    report = evaluate(dataset, kind, _filter_params(kind, args))
    with _open_output(args.output) as fh:
        w = _writer(fh)
        w.writerow(["t", "err_roll", "err_pitch", "err_yaw"])
        for t, e in zip(report.t, report.errors):
            w.writerow([_fmt(t), *(_fmt(v) for v in e)])
    r, m = report.rmse, report.max_error
    print(f"rmse_roll={r[0]:.6g} rmse_pitch={r[1]:.6g} rmse_yaw={r[2]:.6g} "
          f"max_roll={m[0]:.6g} max_pitch={m[1]:.6g} max_yaw={m[2]:.6g} (rad)", file=sys.stderr)
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.output == "-":
        raise ConfigError("synth needs --output PATH")
    if args.trajectory == "fast":
        ds = fast_motion_dataset(seed=args.seed, t_end=args.t_end, dt=args.dt, l=args.l)
    else:
        traj = Constant(args.phi_op) if args.trajectory == "rest" else Sinusoid(args.amplitude, args.omega,
                                                                             offset=args.phi_op)
        noise = None
        if args.accel_noise or args.gyro_noise:
            noise = NoiseModel(accel_std=args.accel_noise, gyro_std=args.gyro_noise, seed=args.seed)
        ds = synthetic_dataset(args.l, traj, args.t_end, args.dt, args.g, noise)
    save_csv(args.output, ds)
    return EXIT_OK


def _add_output(p):
    p.add_argument("-o", "--output", default="-", metavar="PATH", help="CSV destination (default: stdout)")


def _add_gains(p, kp_default=1.0):
    p.add_argument("--kp", type=float, default=kp_default, help="Mahony proportional gain k_p in 1/s")
    p.add_argument("--ki", type=float, default=0.0, help="Mahony integral gain k_i in 1/s² (default 0)")
    p.add_argument("--beta", type=float, default=0.1, help="Madgwick step size β in 1/s (default 0.1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="imuzeros",
        description="Lever-arm effects on IMU attitude filters: zeros, frequency responses, "
                    "closed-loop simulation and dataset replay. All angles are in rad.",
        epilog="Exit codes: 0 ok, 2 config error, 3 no convergence, 4 I/O or parse error.")
    sub = parser.add_subparsers(dest="command", required=True)
    filters = sorted(_KINDS)

    p = sub.add_parser("zeros", help="zero locations over an operating-point or gain grid",
                       description="Columns: sweep variable (phi_op in rad or kp in 1/s), re/im of z1 and z2 in rad/s.")
    p.add_argument("--filter", choices=filters, default="atan", help="estimator (default atan)")
    p.add_argument("--l", type=float, required=True, help="lever arm l in m (distance from roll axis to IMU)")
    p.add_argument("--g", type=float, default=1.0, help="gravity in the units of l per s² (default 1)")
    p.add_argument("--phi-op", type=float, default=0.0, help="operating roll angle in rad, [0, π] (default 0)")
    p.add_argument("--phi-op-grid", type=_lin_grid, metavar="START:STOP:COUNT",
                   help="linear grid of operating angles in rad")
    p.add_argument("--kp", type=float, default=None, help="Mahony gain k_p in 1/s for a phi-op sweep")
    p.add_argument("--kp-grid", type=_log_grid, metavar="START:STOP:COUNT",
                   help="log-spaced grid of Mahony gains k_p in 1/s")
    _add_output(p)
    p.set_defaults(func=cmd_zeros)

    p = sub.add_parser("bode", help="analytic and simulated frequency response of the roll estimate",
                       description="Columns: omega (rad/s), analytic gain (-), analytic phase (rad), "
                                   "empirical gain (-), empirical phase (rad).")
    p.add_argument("--filter", choices=filters, default="atan", help="estimator (default atan)")
    p.add_argument("--l", type=float, required=True, help="lever arm l in m")
    p.add_argument("--g", type=float, default=1.0, help="gravity in the units of l per s² (default 1)")
    p.add_argument("--phi-op", type=float, default=0.0, help="operating roll angle in rad, [0, π] (default 0)")
    p.add_argument("--omega", type=float, nargs="+", default=[0.1, 0.5, 1.0, 2.0, 10.0],
                   help="excitation frequencies in rad/s")
    p.add_argument("--omega-grid", type=_log_grid, metavar="START:STOP:COUNT",
                   help="log-spaced frequency grid in rad/s (overrides --omega)")
    p.add_argument("--amplitude", type=float, default=1e-3, help="excitation amplitude in rad, ≤ 0.01 (default 1e-3)")
    p.add_argument("--analytic-only", action="store_true", help="skip the simulation columns")
    _add_gains(p)
    _add_output(p)
    p.set_defaults(func=cmd_bode)

    p = sub.add_parser("closed-loop", help="reaction-wheel pendulum balanced on an IMU estimate",
                       description="Columns: t (s), phi (rad), phi_dot (rad/s), wheel_speed (rad/s), current (A), "
                                   "active IMU, per-IMU roll estimate (rad) and normalized accel y (g), diverged.")
    p.add_argument("--filter", choices=filters, default="mahony", help="estimator (default mahony)")
    _add_gains(p, kp_default=10.0)
    p.add_argument("--schedule", type=parse_schedule, default=DEFAULT_CONFIG.schedule, metavar="T:LABEL,...",
                   help="IMU feeding the controller from each time in s (default 0:lower,10:upper,20:lower)")
    p.add_argument("--t-end", type=float, default=DEFAULT_CONFIG.t_end, help="duration in s (default 30)")
    p.add_argument("--dt", type=float, default=DEFAULT_CONFIG.dt, help="step in s (default 0.001)")
    p.add_argument("--phi0", type=float, default=0.0, help="initial roll in rad (default 0)")
    p.add_argument("--seed", type=int, default=0, help="sensor-noise seed (default 0)")
    p.add_argument("--true-state", action="store_true", help="feed the true roll and rate to the controller")
    _add_output(p)
    p.set_defaults(func=cmd_closed_loop)

    p = sub.add_parser("replay", help="score an estimator on a recorded CSV with ground truth",
                       description="Input columns t,ax,ay,az,gx,gy,gz,qw,qx,qy,qz (s, g, rad/s, unit quaternion). "
                                   "Output columns: t (s) and wrapped roll/pitch/yaw errors (rad); "
                                   "RMSE summary on stderr.")
    p.add_argument("dataset", help="CSV recording")
    p.add_argument("--filter", choices=filters, default="mahony", help="estimator (default mahony)")
    _add_gains(p)
    _add_output(p)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("synth", help="write a synthetic recording with ground truth",
                       description="Roll trajectories of a single-axis pendulum; accel in g, gyro in rad/s.")
    p.add_argument("--trajectory", choices=("rest", "sinusoid", "fast"), default="sinusoid",
                   help="rest at phi-op, phi-op + A·sin(ωt), or a multi-tone fast motion (SI units, noisy)")
    p.add_argument("--l", type=float, default=0.3, help="lever arm l in m (default 0.3)")
    p.add_argument("--g", type=float, default=1.0, help="gravity in the units of l per s² (default 1)")
    p.add_argument("--phi-op", type=float, default=0.0, help="roll offset in rad (default 0)")
    p.add_argument("--amplitude", type=float, default=1e-3, help="sinusoid amplitude A in rad (default 1e-3)")
    p.add_argument("--omega", type=float, default=1.0, help="sinusoid frequency in rad/s (default 1)")
    p.add_argument("--t-end", type=float, default=20.0, help="duration in s (default 20)")
    p.add_argument("--dt", type=float, default=0.005, help="sample period in s (default 0.005)")
    p.add_argument("--accel-noise", type=float, default=0.0, help="accel noise std in g (default 0)")
    p.add_argument("--gyro-noise", type=float, default=0.0, help="gyro noise std in rad/s (default 0)")
    p.add_argument("--seed", type=int, default=0, help="noise seed (default 0)")
    _add_output(p)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NoConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
