"""Photon-number moments of the initial probe state.

The single-probe observables depend on the optical state only through the
mean and variance of a†a, so the probe is characterised by those two numbers.
The squeezed state is a displaced squeezed vacuum |α, r⟩ with the
displacement along the squeezed (amplitude) quadrature, which gives number
squeezing:

    ⟨n⟩ = |α|² + sinh²r
    V(n) = |α|² e^{−2r} + 2 sinh²r cosh²r

For r = 0 this reduces exactly to the Poissonian coherent state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class OpticalStateMoments:
    mean_n: float
    var_n: float
    label: str

    def __post_init__(self):
        if self.mean_n < 0 or self.var_n < 0:
            raise ValueError("photon-number mean and variance must be >= 0")


def coherent(alpha_sq: float) -> OpticalStateMoments:
    """Coherent state |α⟩ with |α|² = alpha_sq (Poissonian)."""
    if alpha_sq < 0:
        raise ValueError("|alpha|^2 must be non-negative")
    return OpticalStateMoments(mean_n=alpha_sq, var_n=alpha_sq, label="coherent")


def fock(n: int) -> OpticalStateMoments:
    """Number state |n⟩ (zero number variance)."""
    if n < 0:
        raise ValueError("photon number must be non-negative")
    return OpticalStateMoments(mean_n=float(n), var_n=0.0, label="fock")


def squeezed(alpha_sq: float, r: float) -> OpticalStateMoments:
    """Amplitude-squeezed displaced state |α, r⟩ with |α|² = alpha_sq."""
    if alpha_sq < 0:
        raise ValueError("|alpha|^2 must be non-negative")
    sh2 = np.sinh(r) ** 2
    ch2 = np.cosh(r) ** 2
    mean = alpha_sq + sh2
    var = alpha_sq * np.exp(-2.0 * r) + 2.0 * sh2 * ch2
    return OpticalStateMoments(mean_n=float(mean), var_n=float(var), label="squeezed")
