"""Open-loop replay of IMU recordings against ground-truth orientation.

CSV layout (UTF-8, header row, comma separated)::

    t,ax,ay,az,gx,gy,gz[,qw,qx,qy,qz]

Acceleration in g, angular rate in rad/s, optional scalar-first unit
quaternion of the true attitude.  Other columns (magnetometer, for
example) are ignored.  A row may leave all four quaternion cells empty
when no truth is available at that time.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from os import PathLike
from typing import Mapping

import numpy as np

from .errors import MissingColumn, NonMonotonicTime, NoOverlap, ParseError
from .filters import estimate_series
from .imu_model import ImuSeries, NoiseModel, PendulumConfig, TrajectorySamples, sample_trajectory
from .quaternion import Quaternion, euler_from_quat_array, quat_array_from_euler, wrap_angle

IMU_COLUMNS = ("t", "ax", "ay", "az", "gx", "gy", "gz")
TRUTH_COLUMNS = ("qw", "qx", "qy", "qz")
TRUTH_NORM_TOL = 1e-3


@dataclass(frozen=True)
class RecordedDataset:
    """IMU stream plus optional ground-truth quaternions on their own time base."""

    imu: ImuSeries
    truth_t: np.ndarray | None = None
    truth_q: np.ndarray | None = None

    def __post_init__(self):
        self.imu.check_monotonic()
        if (self.truth_t is None) != (self.truth_q is None):
            raise ValueError("truth times and quaternions must be given together")
        if self.truth_t is not None:
            if self.truth_q.shape != (self.truth_t.shape[0], 4):
                raise ValueError("truth quaternions must have shape (N, 4)")
            if np.any(np.diff(self.truth_t) <= 0.0):
                raise NonMonotonicTime("ground-truth timestamps must be strictly increasing")

    @property
    def has_truth(self) -> bool:
        return self.truth_t is not None and self.truth_t.shape[0] > 0

    def truth_euler(self) -> np.ndarray:
        if not self.has_truth:
            raise ValueError("dataset has no ground truth")
        return euler_from_quat_array(self.truth_q)

    @classmethod
    def from_trajectory(cls, samples: TrajectorySamples) -> RecordedDataset:
        return cls(samples.imu, samples.imu.t.copy(), quat_array_from_euler(samples.truth))


def _parse_float(text: str, line: int, column: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"column {column!r}: cannot parse {text!r} as a number", line) from None
    if not math.isfinite(v):
        raise ParseError(f"column {column!r}: non-finite value {text!r}", line)
    return v


def load_csv(path: str | PathLike) -> RecordedDataset:
    """Read a dataset; raises ParseError (with line number), MissingColumn or NonMonotonicTime.

    ``OSError`` propagates when the file cannot be opened.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        try:
            rows = list(csv.reader(fh))
        except (UnicodeDecodeError, csv.Error) as exc:
            raise ParseError(f"unreadable CSV: {exc}") from None
    if not rows:
        raise ParseError("empty file, header row required", 1)
    header = [h.strip() for h in rows[0]]
    missing = [c for c in IMU_COLUMNS if c not in header]
    if missing:
        raise MissingColumn(f"missing column(s): {', '.join(missing)}", 1)
    present = [c for c in TRUTH_COLUMNS if c in header]
    if present and len(present) != 4:
        absent = [c for c in TRUTH_COLUMNS if c not in header]
        raise MissingColumn(f"incomplete ground-truth quaternion, missing {', '.join(absent)}", 1)
    idx = [header.index(c) for c in IMU_COLUMNS]
    qidx = [header.index(c) for c in TRUTH_COLUMNS] if present else []

    imu = []
    tt, tq = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, found {len(row)}", lineno)
        vals = [_parse_float(row[i], lineno, c) for i, c in zip(idx, IMU_COLUMNS)]
        if imu and vals[0] <= imu[-1][0]:
            raise NonMonotonicTime(f"line {lineno}: timestamp {vals[0]!r} does not increase")
        imu.append(vals)
        if qidx:
            cells = [row[i].strip() for i in qidx]
            if all(not c for c in cells):
                continue
            q = [_parse_float(row[i], lineno, c) for i, c in zip(qidx, TRUTH_COLUMNS)]
            if abs(math.sqrt(sum(c * c for c in q)) - 1.0) > TRUTH_NORM_TOL:
                raise ParseError("ground-truth quaternion is not unit", lineno)
            tt.append(vals[0])
            tq.append(q)
    data = np.array(imu, dtype=float).reshape(-1, 7)
    series = ImuSeries(data[:, 0].copy(), data[:, 1:4].copy(), data[:, 4:7].copy())
    if qidx:
        return RecordedDataset(series, np.array(tt, dtype=float), np.array(tq, dtype=float).reshape(-1, 4))
    return RecordedDataset(series)


def save_csv(path: str | PathLike, dataset: RecordedDataset) -> None:
    """Write ``dataset`` so that :func:`load_csv` recovers every float exactly.

    Ground truth is written on rows whose timestamp matches a truth sample;
    truth samples at other times cannot be represented and raise ValueError.
    """
    imu = dataset.imu
    truth = {}
    if dataset.has_truth:
        lookup = {float(t): k for k, t in enumerate(imu.t)}
        for t, q in zip(dataset.truth_t, dataset.truth_q):
            if float(t) not in lookup:
                raise ValueError(f"ground-truth time {t!r} has no matching IMU row")
            truth[lookup[float(t)]] = q
    header = list(IMU_COLUMNS) + (list(TRUTH_COLUMNS) if dataset.truth_t is not None else [])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for k in range(len(imu)):
            row = [repr(float(imu.t[k]))] + [repr(float(v)) for v in imu.accel[k]] + [repr(float(v)) for v in imu.gyro[k]]
            if dataset.truth_t is not None:
                row += [repr(float(v)) for v in truth[k]] if k in truth else [""] * 4
            w.writerow(row)


@dataclass(frozen=True)
class AlignedSeries:
    t: np.ndarray
    estimate: np.ndarray  # (N, 3)
    truth: np.ndarray     # (N, 3)


def align_ground_truth(est_t: np.ndarray, estimate: np.ndarray, truth_t: np.ndarray, truth: np.ndarray) -> AlignedSeries:
    """Interpolate truth Euler angles onto the estimate timestamps.

    Each angle is unwrapped before linear interpolation, so the path between
    neighbours is the shorter arc, then wrapped back to (-π, π].  Estimates
    outside the truth time range are dropped.
    """
    est_t = np.asarray(est_t, dtype=float)
    truth_t = np.asarray(truth_t, dtype=float)
    if est_t.size == 0 or truth_t.size == 0:
        raise NoOverlap("empty series")
    keep = (est_t >= truth_t[0]) & (est_t <= truth_t[-1])
    if not keep.any():
        raise NoOverlap(f"estimates span [{est_t[0]}, {est_t[-1]}] s, truth spans [{truth_t[0]}, {truth_t[-1]}] s")
    t = est_t[keep]
    unwrapped = np.unwrap(np.asarray(truth, dtype=float), axis=0)
    interp = np.column_stack([np.interp(t, truth_t, unwrapped[:, j]) for j in range(3)])
    return AlignedSeries(t, np.asarray(estimate, dtype=float)[keep], wrap_angle(interp))


@dataclass(frozen=True)
class ErrorReport:
    """Per-axis (roll, pitch, yaw) RMSE and maximum absolute error in rad."""

    rmse: np.ndarray
    max_error: np.ndarray
    t: np.ndarray
    errors: np.ndarray  # (N, 3), wrapped estimate - truth

    @classmethod
    def from_errors(cls, t: np.ndarray, errors: np.ndarray) -> ErrorReport:
        errors = np.asarray(errors, dtype=float)
        return cls(np.sqrt(np.mean(errors**2, axis=0)), np.max(np.abs(errors), axis=0), np.asarray(t), errors)


def evaluate(dataset: RecordedDataset, kind: str, params: Mapping[str, float] | None = None,
             q0: Quaternion | None = None) -> ErrorReport:
    """Run an estimator over the dataset and score it against the ground truth.

    ``q0`` defaults to the ground truth interpolated at the first IMU sample
    (identity when the truth starts later).
    """
    if not dataset.has_truth:
        raise ValueError("dataset has no ground truth")
    truth = dataset.truth_euler()
    if q0 is None:
        t0 = dataset.imu.t[0]
        if truth.shape[0] and dataset.truth_t[0] <= t0 <= dataset.truth_t[-1]:
            e0 = align_ground_truth(dataset.imu.t[:1], np.zeros((1, 3)), dataset.truth_t, truth).truth[0]
            q0 = Quaternion.from_array(quat_array_from_euler(e0[None, :])[0])
        else:
            q0 = Quaternion.identity()
    est = estimate_series(kind, params, dataset.imu, q0)
    pair = align_ground_truth(dataset.imu.t, est, dataset.truth_t, truth)
    return ErrorReport.from_errors(pair.t, wrap_angle(pair.estimate - pair.truth))


def synthetic_dataset(l: float, trajectory, t_end: float, dt: float = 0.01, g: float = 1.0,
                      noise: NoiseModel | None = None) -> RecordedDataset:
    """Simulated recording of a roll trajectory with exact ground truth."""
    return RecordedDataset.from_trajectory(sample_trajectory(PendulumConfig(l, g), trajectory, 0.0, t_end, dt, noise))


@dataclass(frozen=True)
class FastMotion:
    """Sum of roll sinusoids with large angular accelerations (rad, rad/s)."""

    components: tuple[tuple[float, float, float], ...] = ((0.35, 4.0, 0.0), (0.2, 7.3, 1.1), (0.1, 11.9, 2.3))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        phi = np.zeros_like(t)
        phid = np.zeros_like(t)
        phidd = np.zeros_like(t)
        for a, w, p in self.components:
            s, c = np.sin(w * t + p), np.cos(w * t + p)
            phi += a * s
            phid += a * w * c
            phidd -= a * w * w * s
        return phi, phid, phidd


def fast_motion_dataset(seed: int = 0, t_end: float = 20.0, dt: float = 0.005, l: float = 0.3) -> RecordedDataset:
    """Hand-held style fast rotation: IMU 0.3 m from the axis, SI units, mild sensor noise."""
    noise = NoiseModel(accel_std=0.02, gyro_std=0.01, seed=seed)
    return synthetic_dataset(l, FastMotion(), t_end, dt, g=9.81, noise=noise)
