"""Symbolic linearization of the Mahony filter, used as an independent oracle.

The 7-state ODE (quaternion and bias state) is differentiated with sympy
around the operating point, the measurement model is linearized separately,
and the roll channel is reduced numerically to a minimal realization whose
characteristic polynomials give the transfer-function coefficients.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
import sympy as sp

from ..filters import MahonyGains
from .tf import OperatingPoint, RationalTf


def _qmul(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


@lru_cache(maxsize=1)
def _symbolic():
    w, x, y, z, b1, b2, b3 = sp.symbols("w x y z b1 b2 b3", real=True)
    ax, ay, az, gx, gy, gz = sp.symbols("ax ay az gx gy gz", real=True)
    kp, ki = sp.symbols("kp ki", real=True)
    phi, phid, phidd, r = sp.symbols("phi phid phidd r", real=True)

    state = sp.Matrix([w, x, y, z, b1, b2, b3])
    inputs = sp.Matrix([ax, ay, az, gx, gy, gz])
    # predicted gravity direction in the body frame
    v = sp.Matrix([2 * (x * z - w * y), 2 * (y * z + w * x), w**2 - x**2 - y**2 + z**2])
    a = sp.Matrix([ax, ay, az])
    e = a.cross(v)
    u = sp.Matrix([gx, gy, gz]) + sp.Matrix([b1, b2, b3]) + kp * e
    qd = _qmul((w, x, y, z), (0, u[0], u[1], u[2]))
    f = sp.Matrix([sp.Rational(1, 2) * c for c in qd] + list(ki * e))

    roll = sp.atan2(w * x + y * z, sp.Rational(1, 2) - x**2 - y**2)
    pitch = sp.asin(2 * (w * y - x * z))
    yaw = sp.atan2(w * z + x * y, sp.Rational(1, 2) - y**2 - z**2)
    out = sp.Matrix([roll, pitch, yaw])

    acc = sp.Matrix([0, sp.sin(phi) - r * phidd, sp.cos(phi) - r * phid**2])
    acc_unit = acc / sp.sqrt(acc.dot(acc))

    args = (state, inputs, kp, ki)
    A = sp.lambdify(args, f.jacobian(state), "numpy")
    B = sp.lambdify(args, f.jacobian(inputs), "numpy")
    C = sp.lambdify((state,), out.jacobian(state), "numpy")
    da = sp.lambdify((phi, phid, phidd, r), acc_unit.jacobian(sp.Matrix([phi, phid, phidd])), "numpy")
    return A, B, C, da


def linearize(op: OperatingPoint, gains: MahonyGains):
    """State-space data of the linearized filter at ``op``.

    Returns
    -------
    A : (7, 7) ndarray
    B : (7, 3) ndarray
        Input columns for ``Δφ``, ``s·Δφ`` and ``s²·Δφ``.
    C : (3, 7) ndarray
        Roll, pitch and yaw output rows.
    """
    A_f, B_f, C_f, da_f = _symbolic()
    c, s = math.cos(op.phi_op / 2.0), math.sin(op.phi_op / 2.0)
    x0 = np.array([c, s, 0.0, 0.0, 0.0, 0.0, 0.0])
    u0 = np.array([0.0, math.sin(op.phi_op), math.cos(op.phi_op), 0.0, 0.0, 0.0])
    A = np.array(A_f(x0, u0, gains.kp, gains.ki), dtype=float)
    Bu = np.array(B_f(x0, u0, gains.kp, gains.ki), dtype=float)
    C = np.array(C_f(x0), dtype=float)
    da = np.array(da_f(op.phi_op, 0.0, 0.0, op.l / op.g), dtype=float)
    gyro_roll = np.zeros(6)
    gyro_roll[3] = 1.0
    B = np.column_stack([Bu[:, :3] @ da[:, 0], Bu @ gyro_roll, Bu[:, :3] @ da[:, 2]])
    return A, B, C


def _orth(M: np.ndarray, tol: float) -> np.ndarray:
    if M.size == 0:
        return M
    U, sv, _ = np.linalg.svd(M, full_matrices=False)
    return U[:, sv > tol]


def _reachable_basis(A: np.ndarray, B: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    n = A.shape[0]
    scale = max(1.0, np.linalg.norm(A, 2))
    V = _orth(B, tol * max(1.0, np.linalg.norm(B, 2)))
    for _ in range(n):
        W = A @ V / scale
        W = W - V @ (V.T @ W)
        W = W - V @ (V.T @ W)
        Wn = _orth(W, tol)
        if Wn.shape[1] == 0:
            break
        V = np.column_stack([V, Wn])
    return V


def minimal_realization(A, B, C, tol: float = 1e-10):
    """Reachable-then-observable projection of ``(A, B, C)``."""
    V = _reachable_basis(A, B, tol)
    A1, B1, C1 = V.T @ A @ V, V.T @ B, C @ V
    W = _reachable_basis(A1.T, C1.T, tol)
    return W.T @ A1 @ W, W.T @ B1, C1 @ W


def _charpoly_asc(M: np.ndarray) -> np.ndarray:
    return np.real(np.poly(M))[::-1] if M.size else np.array([1.0])


def mahony_tf_state_space(op: OperatingPoint, gains: MahonyGains) -> RationalTf:
    """Roll transfer function from the reduced symbolic linearization.

    Each input channel ``b_j`` contributes
    ``C adj(sI - A) b_j = det(sI - A + b_j C) - det(sI - A)``.
    """
    A, B, C = linearize(op, gains)
    Ar, Br, Cr = minimal_realization(A, B, C[:1])
    den = _charpoly_asc(Ar)
    num = np.zeros(len(den) + 2)
    for j, power in enumerate((0, 1, 2)):
        nj = _charpoly_asc(Ar - np.outer(Br[:, j], Cr[0])) - den
        num[power:power + len(nj)] += nj
    return RationalTf(tuple(num), tuple(den))


def state_space_response(op: OperatingPoint, gains: MahonyGains, omega: float, output: int = 0) -> complex:
    """Full 7-state evaluation of ``C (iωI - A)⁻¹ B`` on one output channel (ω ≠ 0)."""
    A, B, C = linearize(op, gains)
    s = 1j * omega
    u = B @ np.array([1.0, s, s * s])
    return complex(C[output] @ np.linalg.solve(s * np.eye(A.shape[0]) - A, u))
