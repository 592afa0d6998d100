"""Attitude filters under lever-arm accelerations and their linearized zeros."""
from ._backend import BACKEND
from .quaternion import EulerAngles, Quaternion, euler_to_quat, quat_conj, quat_mul, quat_to_euler, rotate_vector

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "EulerAngles",
    "Quaternion",
    "euler_to_quat",
    "quat_conj",
    "quat_mul",
    "quat_to_euler",
    "rotate_vector",
]
