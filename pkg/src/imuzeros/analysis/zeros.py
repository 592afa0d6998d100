"""Linearized roll transfer functions of the three estimators and their zeros.

All transfer functions map the true roll deviation ``Δφ`` to the estimated
roll deviation ``Δφ̂`` around an :class:`OperatingPoint`, writing
``lc = (l/g)·cos(phi_op)``:

* atan2 and the Madgwick sliding surface: ``1 - lc·s²``
* Mahony: ``(ki + kp·s + (1 - ki·lc)·s² - kp·lc·s³) / (ki + kp·s + s²)``
"""
from __future__ import annotations

import math

import numpy as np

from ..filters import MahonyGains
from .tf import OperatingPoint, RationalTf

ZeroSet = tuple[complex, ...]


def _ordered(roots) -> ZeroSet:
    return tuple(sorted((complex(r) for r in roots), key=lambda z: (-z.real, -z.imag)))


def atan_tf(op: OperatingPoint) -> RationalTf:
    return RationalTf((1.0, 0.0, -op.lever_cos), (1.0,))


def madgwick_sliding_tf(op: OperatingPoint) -> RationalTf:
    """Roll transfer function of a Madgwick filter that stays on ``∇f = 0``.

    Solving the linearized gradient for the roll quaternion component gives
    the same map as the atan2 estimator.
    """
    return atan_tf(op)


def atan_zeros(op: OperatingPoint) -> ZeroSet:
    """``±1/√lc``: real for ``lc > 0``, imaginary for ``lc < 0``, none for ``lc = 0``."""
    lc = op.lever_cos
    if lc == 0.0:
        return ()
    r = 1.0 / math.sqrt(abs(lc))
    if lc > 0.0:
        return (complex(r, 0.0), complex(-r, 0.0))
    return (complex(0.0, r), complex(0.0, -r))


def mahony_tf(op: OperatingPoint, gains: MahonyGains, verify: bool = False) -> RationalTf:
    """Closed-form Mahony roll transfer function.

    With ``verify=True`` the result is rebuilt from the symbolic state-space
    linearization and compared (raises ``AssertionError`` on mismatch).
    """
    lc = op.lever_cos
    kp, ki = gains.kp, gains.ki
    tf = RationalTf((ki, kp, 1.0 - ki * lc, -kp * lc), (ki, kp, 1.0))
    if verify:
        from .state_space import mahony_tf_state_space

        other = mahony_tf_state_space(op, gains)
        if not tf.equivalent(other, 1e-10):
            raise AssertionError(f"closed form {tf} disagrees with state-space reduction {other}")
    return tf


def mahony_zero_polynomial(op: OperatingPoint, kp: float) -> tuple[float, float, float]:
    """Ascending coefficients of ``kp + s - kp·lc·s²`` (numerator with ``ki = 0``, common ``s`` removed)."""
    return (kp, 1.0, -kp * op.lever_cos)


def mahony_zeros(op: OperatingPoint, kp: float) -> ZeroSet:
    """Zeros of the Mahony transfer function with ``ki = 0``.

    Roots of ``kp + s - kp·lc·s² = 0``, i.e. ``(1 ± √(1 + 4·kp²·lc)) / (2·kp·lc)``,
    computed in the cancellation-free form.  For ``lc = 0`` the single root
    is ``-kp``.
    """
    if not kp > 0.0:
        raise ValueError("kp must be > 0")
    lc = op.lever_cos
    if lc == 0.0:
        return (complex(-kp, 0.0),)
    a, b, c = -kp * lc, 1.0, kp
    disc = b * b - 4.0 * a * c
    if disc >= 0.0:
        q = -0.5 * (b + math.sqrt(disc))
        return _ordered((q / a, c / q))
    re = -b / (2.0 * a)
    im = math.sqrt(-disc) / (2.0 * abs(a))
    return _ordered((complex(re, im), complex(re, -im)))


def mahony_transition_kp(op: OperatingPoint) -> float | None:
    """Gain where the Mahony zeros turn from real to complex, or ``None``.

    The discriminant ``1 + 4·kp²·lc`` vanishes at ``kp = 1 / (2·√(-lc))``,
    which exists only for ``lc < 0`` (``phi_op`` beyond π/2).
    """
    lc = op.lever_cos
    if lc >= 0.0:
        return None
    return 1.0 / (2.0 * math.sqrt(-lc))


def default_phi_grid() -> np.ndarray:
    return np.linspace(0.0, math.pi, 181)


def default_kp_grid() -> np.ndarray:
    return np.logspace(-2.0, 3.0, 121)


def zero_locus_atan(l: float, phi_grid=None, g: float = 1.0) -> list[tuple[float, ZeroSet]]:
    phi_grid = default_phi_grid() if phi_grid is None else np.asarray(phi_grid, dtype=float)
    if phi_grid.size == 0:
        raise ValueError("empty phi_op grid")
    return [(float(p), atan_zeros(OperatingPoint(float(p), l, g))) for p in phi_grid]


def zero_locus_mahony(l: float, phi_op: float, kp_grid=None, g: float = 1.0) -> list[tuple[float, ZeroSet]]:
    kp_grid = default_kp_grid() if kp_grid is None else np.asarray(kp_grid, dtype=float)
    if kp_grid.size == 0 or np.any(kp_grid <= 0.0):
        raise ValueError("kp grid must be non-empty and positive")
    op = OperatingPoint(phi_op, l, g)
    return [(float(k), mahony_zeros(op, float(k))) for k in kp_grid]
