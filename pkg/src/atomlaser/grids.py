"""Uniform momentum/position lattices, quadrature and Fourier pairing.

Conventions used throughout the package:

* momentum integrals are Riemann sums,  ∫ f(k) dk  ->  sum_i f(k_i) * dk
* the position transform is  Psi(x) = (2π)^{-1/2} ∫ psi(k) e^{ikx} dk
* a momentum grid of n samples with spacing dk pairs with a position
  window of width 2π/dk sampled at dx = 2π/(n*dk), centred on x = 0,
  which makes the discrete transform exactly unitary (Parseval holds to
  round-off and the round trip k -> x -> k is the identity).

The OPO scenario represents the untrapped field on the union of two
narrow momentum bands around ±k_beam; ``ConcatGrid`` concatenates two
``MomentumGrid`` objects into one sample lattice so that every k-space
reduction stays a plain weighted sum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class GridError(ValueError):
    """Invalid grid construction or field/grid mismatch."""


@dataclass(frozen=True)
class MomentumGrid:
    """Uniform k-lattice: n samples centred on k_center, half-width k_halfwidth.

    Samples are k_i = k_center - k_halfwidth + i*dk with dk = 2*k_halfwidth/n,
    i.e. a midpoint-style lattice that never duplicates the band edges.
    """

    n: int
    k_center: float
    k_halfwidth: float

    def __post_init__(self):
        if self.n < 8:
            raise GridError(f"momentum grid needs n >= 8, got n={self.n}")
        if self.n & (self.n - 1):
            raise GridError(f"momentum grid n must be a power of two, got n={self.n}")
        if self.k_halfwidth <= 0:
            raise GridError("k_halfwidth must be positive")

    @property
    def dk(self) -> float:
        return 2.0 * self.k_halfwidth / self.n

    @cached_property
    def k(self) -> np.ndarray:
        i = np.arange(self.n)
        return self.k_center - self.k_halfwidth + i * self.dk

    def position_grid(self) -> "PositionGrid":
        """Conjugate position lattice (window 2π/dk centred on x = 0)."""
        return PositionGrid(n=self.n, dk=self.dk)

    def refined(self, factor: int = 2) -> "MomentumGrid":
        """Same band, `factor` times as many samples."""
        return MomentumGrid(self.n * factor, self.k_center, self.k_halfwidth)


@dataclass(frozen=True)
class PositionGrid:
    """Position lattice conjugate to a MomentumGrid: dx*dk*n = 2π exactly."""

    n: int
    dk: float

    @property
    def dx(self) -> float:
        return 2.0 * np.pi / (self.n * self.dk)

    @cached_property
    def x(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) * self.dx


@dataclass(frozen=True)
class ConcatGrid:
    """Union of disjoint uniform momentum bands sharing one dk.

    Used for the twin-beam scenario (bands around ±k_beam).  Riemann sums
    and pointwise Fourier evaluation extend verbatim; there is no single
    conjugate position lattice, so position-space quantities are evaluated
    at explicit point lists by summing both bands.
    """

    bands: tuple[MomentumGrid, ...]

    def __post_init__(self):
        if len(self.bands) < 1:
            raise GridError("ConcatGrid needs at least one band")
        dks = {b.dk for b in self.bands}
        if max(dks) - min(dks) > 1e-12 * max(dks):
            raise GridError("ConcatGrid bands must share the same dk")
        # bands must not overlap
        edges = sorted((b.k_center - b.k_halfwidth, b.k_center + b.k_halfwidth)
                       for b in self.bands)
        for (_, hi), (lo, _) in zip(edges, edges[1:]):
            if lo < hi:
                raise GridError("ConcatGrid bands overlap")

    @property
    def n(self) -> int:
        return sum(b.n for b in self.bands)

    @property
    def dk(self) -> float:
        return self.bands[0].dk

    @cached_property
    def k(self) -> np.ndarray:
        return np.concatenate([b.k for b in self.bands])

    def band_slice(self, i: int) -> slice:
        start = sum(b.n for b in self.bands[:i])
        return slice(start, start + self.bands[i].n)

    def refined(self, factor: int = 2) -> "ConcatGrid":
        return ConcatGrid(tuple(b.refined(factor) for b in self.bands))


Grid = MomentumGrid | PositionGrid | ConcatGrid


def _spacing(grid) -> float:
    return grid.dx if isinstance(grid, PositionGrid) else grid.dk


def _axis(grid) -> np.ndarray:
    return grid.x if isinstance(grid, PositionGrid) else grid.k


@dataclass(frozen=True)
class GridField:
    """Complex samples attached to a grid (one value per lattice point)."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.n,):
            raise GridError(
                f"field has {v.shape} values for a grid of {self.grid.n} points")
        if not np.all(np.isfinite(v.view(float))):
            raise GridError("field contains non-finite values")
        object.__setattr__(self, "values", v)


def integrate(f: GridField) -> complex:
    """Riemann quadrature sum_i f_i * Δ (Δ = dk or dx)."""
    return complex(np.sum(f.values) * _spacing(f.grid))


def fourier_kernel(kgrid, x: np.ndarray, derivative: int = 0) -> np.ndarray:
    """Matrix K with K[j, i] = (ik_i)^derivative e^{i k_i x_j} dk / sqrt(2π).

    Applying K to k-samples evaluates (d/dx)^derivative of the position
    transform at the points ``x``; works for MomentumGrid and ConcatGrid.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    k = _axis(kgrid)
    phase = np.exp(1j * np.outer(x, k))
    if derivative:
        phase = phase * (1j * k) ** derivative
    return phase * (kgrid.dk / np.sqrt(2.0 * np.pi))


def to_position(f: GridField, xgrid: PositionGrid | None = None) -> GridField:
    """Discrete Psi(x_j) = (2π)^{-1/2} Σ_i f_i e^{i k_i x_j} dk on the conjugate lattice."""
    if not isinstance(f.grid, MomentumGrid):
        raise GridError("to_position expects a field on a MomentumGrid")
    if xgrid is None:
        xgrid = f.grid.position_grid()
    vals = fourier_kernel(f.grid, xgrid.x) @ f.values
    return GridField(xgrid, vals)


def to_momentum(f: GridField, kgrid: MomentumGrid) -> GridField:
    """Inverse of :func:`to_position` (exact on the conjugate lattice pair)."""
    if not isinstance(f.grid, PositionGrid):
        raise GridError("to_momentum expects a field on a PositionGrid")
    x = f.grid.x
    phase = np.exp(-1j * np.outer(kgrid.k, x))
    vals = phase @ f.values * (f.grid.dx / np.sqrt(2.0 * np.pi))
    return GridField(kgrid, vals)


def spectral_derivative(f: GridField, kgrid: MomentumGrid | None = None) -> GridField:
    """d/dx via the momentum representation: multiply by ik and transform back.

    ``kgrid`` selects the momentum band the field lives on; the default is
    the zero-centred conjugate band of the position lattice.
    """
    if not isinstance(f.grid, PositionGrid):
        raise GridError("spectral_derivative expects a field on a PositionGrid")
    if kgrid is None:
        kgrid = MomentumGrid(f.grid.n, 0.0, f.grid.n * f.grid.dk / 2.0)
    kf = to_momentum(f, kgrid)
    dvals = fourier_kernel(kgrid, f.grid.x) @ (1j * kgrid.k * kf.values)
    return GridField(f.grid, dvals)
