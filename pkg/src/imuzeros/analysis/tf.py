"""Operating points and real rational transfer functions in ``s``."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import PoleOnAxis

COEF_TOL = 1e-14
COS_TOL = 1e-12
CANCEL_TOL = 1e-9


@dataclass(frozen=True)
class OperatingPoint:
    """Roll ``phi_op`` in [0, π] held at rest, lever arm ``l`` (m) and gravity ``g``."""

    phi_op: float
    l: float
    g: float = 1.0

    def __post_init__(self):
        if not (-COS_TOL <= self.phi_op <= math.pi + COS_TOL):
            raise ValueError(f"phi_op must lie in [0, pi], got {self.phi_op}")
        if not self.l >= 0.0:
            raise ValueError(f"lever arm must be >= 0, got {self.l}")
        if not self.g > 0.0:
            raise ValueError(f"gravity must be > 0, got {self.g}")

    @property
    def lever_cos(self) -> float:
        """``(l/g)·cos(phi_op)``, exactly zero when the cosine is below 1e-12."""
        c = math.cos(self.phi_op)
        if abs(c) < COS_TOL:
            return 0.0
        return self.l / self.g * c


def _trim(coefs) -> tuple[float, ...]:
    c = [float(v) for v in coefs]
    while len(c) > 1 and abs(c[-1]) < COEF_TOL:
        c.pop()
    return tuple(c)


@dataclass(frozen=True)
class RationalTf:
    """``num(s) / den(s)`` with coefficients in ascending powers of ``s``.

    Highest-order coefficients below ``1e-14`` are trimmed on construction.
    """

    num: tuple[float, ...]
    den: tuple[float, ...]

    def __post_init__(self):
        num = _trim(self.num)
        den = _trim(self.den)
        if all(abs(c) < COEF_TOL for c in den):
            raise ValueError("denominator is identically zero")
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    def __call__(self, s):
        return np.polyval(self.num[::-1], s) / np.polyval(self.den[::-1], s)

    @property
    def order(self) -> tuple[int, int]:
        return len(self.num) - 1, len(self.den) - 1

    def zeros(self) -> np.ndarray:
        return np.roots(self.num[::-1])

    def poles(self) -> np.ndarray:
        return np.roots(self.den[::-1])

    def normalized(self) -> RationalTf:
        """Scale so the highest-order denominator coefficient is one."""
        k = self.den[-1]
        return RationalTf(tuple(c / k for c in self.num), tuple(c / k for c in self.den))

    def minreal(self, tol: float = CANCEL_TOL) -> tuple[RationalTf, list[complex]]:
        """Cancel pole-zero pairs closer than ``tol``.

        Returns the reduced transfer function and the cancelled roots, so a
        cancellation is never silent.
        """
        zs = list(self.zeros())
        ps = list(self.poles())
        cancelled = []
        for z in list(zs):
            if not ps:
                break
            d = [abs(z - p) for p in ps]
            j = int(np.argmin(d))
            if d[j] < tol:
                cancelled.append(complex(z))
                zs.remove(z)
                ps.pop(j)
        if not cancelled:
            return self, []
        factor = np.real(np.poly(cancelled))
        num, _ = np.polydiv(np.array(self.num[::-1]), factor)
        den, _ = np.polydiv(np.array(self.den[::-1]), factor)
        return RationalTf(tuple(num[::-1]), tuple(den[::-1])), cancelled

    def equivalent(self, other: RationalTf, tol: float = 1e-10) -> bool:
        """Same rational function, tested by cross-multiplication."""
        lhs = np.polymul(self.num[::-1], other.den[::-1])
        rhs = np.polymul(other.num[::-1], self.den[::-1])
        n = max(len(lhs), len(rhs))
        lhs = np.pad(lhs, (n - len(lhs), 0))
        rhs = np.pad(rhs, (n - len(rhs), 0))
        scale = max(1.0, float(np.max(np.abs(lhs))), float(np.max(np.abs(rhs))))
        return bool(np.max(np.abs(lhs - rhs)) <= tol * scale)


def freq_response(tf: RationalTf, omega: float) -> complex:
    """``G(iω)``.

    Raises
    ------
    PoleOnAxis
        If ``|den(iω)| < 1e-12``.
    """
    s = 1j * omega
    d = np.polyval(tf.den[::-1], s)
    if abs(d) < 1e-12:
        raise PoleOnAxis(f"denominator vanishes at s = {s}")
    return complex(np.polyval(tf.num[::-1], s) / d)
