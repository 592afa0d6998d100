"""Linearized estimator analysis: transfer functions, zeros and frequency responses."""
from .empirical import FreqPoint, empirical_freq_response, fit_sinusoid
from .tf import OperatingPoint, RationalTf, freq_response
from .zeros import (
    ZeroSet,
    atan_tf,
    atan_zeros,
    default_kp_grid,
    default_phi_grid,
    madgwick_sliding_tf,
    mahony_tf,
    mahony_transition_kp,
    mahony_zero_polynomial,
    mahony_zeros,
    zero_locus_atan,
    zero_locus_mahony,
)

__all__ = [
    "FreqPoint", "OperatingPoint", "RationalTf", "ZeroSet",
    "atan_tf", "atan_zeros", "default_kp_grid", "default_phi_grid", "empirical_freq_response",
    "fit_sinusoid", "freq_response", "madgwick_sliding_tf", "mahony_tf", "mahony_transition_kp",
    "mahony_zero_polynomial", "mahony_zeros", "zero_locus_atan", "zero_locus_mahony",
]
