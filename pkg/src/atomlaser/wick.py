"""Vacuum moments of linear and quadratic forms in bosonic mode operators.

A ``LinearForm`` is X = Σ_μ u_μ b_μ + v_μ b†_μ over a finite set of modes
whose initial state is the vacuum.  The only non-vanishing elementary pairing
is ⟨b_μ b†_ν⟩ = δ_μν, so ⟨XY⟩ = Σ_μ u_Xμ v_Yμ, and fourth moments of a
zero-mean Gaussian state split into the three order-preserving pairings.
Nothing here assumes the coefficients form a canonical transformation;
commutators are whatever the coefficients imply, which keeps the engine
exactly comparable to brute-force operator algebra in a truncated Fock
space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LinearForm:
    """X = u·b + v·b† over a fixed mode basis (vacuum initial state)."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u", np.atleast_1d(np.asarray(self.u, dtype=complex)))
        object.__setattr__(self, "v", np.atleast_1d(np.asarray(self.v, dtype=complex)))
        if self.u.shape != self.v.shape:
            raise ValueError("u and v must have the same length")

    def dagger(self) -> "LinearForm":
        return LinearForm(self.v.conj(), self.u.conj())

    def __add__(self, other: "LinearForm") -> "LinearForm":
        return LinearForm(self.u + other.u, self.v + other.v)

    def __sub__(self, other: "LinearForm") -> "LinearForm":
        return LinearForm(self.u - other.u, self.v - other.v)

    def __mul__(self, z: complex) -> "LinearForm":
        return LinearForm(z * self.u, z * self.v)

    __rmul__ = __mul__


def pair(x: LinearForm, y: LinearForm) -> complex:
    """⟨XY⟩ on the vacuum (order matters)."""
    return complex(x.u @ y.v)


def commutator(x: LinearForm, y: LinearForm) -> complex:
    """[X, Y], a c-number for linear forms."""
    return pair(x, y) - pair(y, x)


def linear_variance(x: LinearForm) -> float:
    """V(X) = ⟨X²⟩ for a Hermitian zero-mean form."""
    return float(np.real(pair(x, x)))


def linear_covariance(x: LinearForm, y: LinearForm) -> float:
    """Symmetrised covariance ½⟨XY + YX⟩ for Hermitian zero-mean forms."""
    return float(np.real(0.5 * (pair(x, y) + pair(y, x))))


@dataclass(frozen=True)
class QuadraticForm:
    """A = Σ_a w_a P_a Q_a with the operator product taken in the given order."""

    terms: tuple[tuple[complex, LinearForm, LinearForm], ...]

    def mean(self) -> complex:
        return sum(w * pair(p, q) for w, p, q in self.terms)


def quad_covariance(a: QuadraticForm, b: QuadraticForm) -> complex:
    """⟨AB⟩ − ⟨A⟩⟨B⟩ via Wick pairings of the zero-mean Gaussian state."""
    total = 0.0 + 0.0j
    for w1, p, q in a.terms:
        for w2, r, s in b.terms:
            total += w1 * w2 * (pair(p, r) * pair(q, s) + pair(p, s) * pair(q, r))
    return total


def quad_variance(a: QuadraticForm) -> float:
    """V(A) for Hermitian A (imaginary part is round-off and is discarded)."""
    return float(np.real(quad_covariance(a, a)))
