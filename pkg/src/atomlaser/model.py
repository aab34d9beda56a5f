"""Physical parameters and the reduced single-probe / twin-beam coupling model.

After adiabatic elimination of the excited state the dynamics depends on the
bare experimental constants only through three composites:

* omega0(k) = ħk²/2m − ħk_kick²/2m + ω_a   (free-atom dispersion, written in
  the resonance-matched form so that omega0(k_kick) = ω_a identically),
* Omega0(k) = Ω φ₀(k − k_kick)             (momentum-selective Raman coupling),
* ω_a                                       (effective optical frequency).

φ₀ is the unit-normalised harmonic-oscillator ground state in momentum space,
φ₀(k) = (π s²)^{-1/4} exp(−k²/2s²) with s² = m ω_t / ħ, so the rms width of
|φ₀|² is σ_k = sqrt(m ω_t / 2ħ) ≈ 1.29e4 rad/m for the default parameters.

Default constants model a ⁸⁷Rb condensate Raman-outcoupled by
counter-propagating beams (kick 1.6e7 rad/m).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.constants import hbar

from .grids import GridField, GridError, MomentumGrid


@dataclass(frozen=True)
class PhysicalParams:
    """Experimental constants of the outcoupling model (SI units).

    chi_beta is the OPO pump drive and is zero for the single-probe setup.
    pump_detuning_matched asserts the pump tuning ω_p − 2(ω−Δ₂) = 2ω_a, under
    which the pump phase is exp(−2iω_a t); no other tuning is supported.
    """

    m: float = 1.4e-25            # atomic mass, kg
    omega_t: float = 0.25         # trap frequency, rad/s
    k_kick: float = 1.6e7         # two-photon momentum kick, rad/m
    Omega: float = 90.0           # Raman coupling amplitude, rad/s
    omega_a: float = 20.0         # effective optical mode frequency, rad/s
    chi_beta: float = 0.0         # OPO pump drive χβ, 1/s
    pump_detuning_matched: bool = True

    def __post_init__(self):
        if self.m <= 0 or self.omega_t <= 0 or self.k_kick <= 0:
            raise ValueError("m, omega_t and k_kick must be positive")
        if self.Omega < 0 or self.chi_beta < 0:
            raise ValueError("Omega and chi_beta must be non-negative")
        if not self.pump_detuning_matched:
            raise ValueError("only the matched pump tuning is implemented")

    @property
    def sigma_k(self) -> float:
        """rms momentum width of |φ₀|²: sqrt(m ω_t / 2ħ)."""
        return np.sqrt(self.m * self.omega_t / (2.0 * hbar))

    @property
    def recoil_velocity(self) -> float:
        """ħ k_kick / m, the speed of the outcoupled beam."""
        return hbar * self.k_kick / self.m


def default_params() -> PhysicalParams:
    """Single-probe defaults (Ω = 90 rad/s, no pump)."""
    return PhysicalParams()


def opo_params() -> PhysicalParams:
    """Twin-beam (OPO-driven) defaults: Ω = 108 rad/s, χβ = 80 s⁻¹."""
    return replace(default_params(), Omega=108.0, chi_beta=80.0)


def phi0_samples(params: PhysicalParams, k: np.ndarray) -> np.ndarray:
    """φ₀ evaluated at offsets k from its centre (units m^{1/2})."""
    s2 = params.m * params.omega_t / hbar
    return (np.pi * s2) ** -0.25 * np.exp(-np.asarray(k) ** 2 / (2.0 * s2))


def condensate_phi0(params: PhysicalParams, grid: MomentumGrid) -> GridField:
    """Ground-state momentum wavefunction sampled on ``grid`` (centred at k = 0).

    Raises GridError when the lattice does not resolve σ_k with at least
    8 samples.
    """
    if grid.dk > params.sigma_k / 8.0:
        raise GridError(
            f"grid spacing dk={grid.dk:.3g} too coarse for sigma_k="
            f"{params.sigma_k:.3g} (need >= 8 samples per sigma_k)")
    return GridField(grid, phi0_samples(params, grid.k))


@dataclass(frozen=True)
class ReducedModel:
    """Single-probe coefficients omega0(k), Omega0(k) and ω_a.

    coupling_phase rotates Omega0 by a global phase e^{iθ}; all moduli of the
    mode functions are invariant under it (the phase is absorbed into a).
    """

    params: PhysicalParams
    coupling_phase: float = 0.0

    def omega0(self, k) -> np.ndarray:
        p = self.params
        return hbar * (np.asarray(k) ** 2 - p.k_kick ** 2) / (2.0 * p.m) + p.omega_a

    def Omega0(self, k) -> np.ndarray:
        p = self.params
        base = p.Omega * phi0_samples(p, np.asarray(k) - p.k_kick)
        if self.coupling_phase:
            return base * np.exp(1j * self.coupling_phase)
        return base

    @property
    def omega_a(self) -> float:
        return self.params.omega_a


@dataclass(frozen=True)
class OpoModel:
    """Twin-beam coefficients: shared dispersion, two couplings, pump drive.

    The beams pick up opposite kicks ±k_kick, so Omega1 is supported near
    +k_kick and Omega2 near −k_kick; on the standard band layout their
    overlap underflows to exactly zero, which is what justifies dropping the
    optical cross-coupling term.

    omega2_sign flips the second coupling globally; no mode-function modulus
    depends on it (the sign is a phase redefinition of the second optical
    mode), which the test suite asserts.
    """

    params: PhysicalParams
    omega2_sign: float = 1.0

    def omega0(self, k) -> np.ndarray:
        p = self.params
        return hbar * (np.asarray(k) ** 2 - p.k_kick ** 2) / (2.0 * p.m) + p.omega_a

    def Omega1(self, k) -> np.ndarray:
        p = self.params
        return p.Omega * phi0_samples(p, np.asarray(k) - p.k_kick)

    def Omega2(self, k) -> np.ndarray:
        p = self.params
        return self.omega2_sign * p.Omega * phi0_samples(p, np.asarray(k) + p.k_kick)

    def chi_p(self, t: float) -> complex:
        """Pump coupling χβ e^{−2iω_a t} (matched tuning)."""
        return self.params.chi_beta * np.exp(-2j * self.params.omega_a * t)

    @property
    def omega_a(self) -> float:
        return self.params.omega_a

    @property
    def chi_beta(self) -> float:
        return self.params.chi_beta


def optimal_omega_estimate(params: PhysicalParams) -> float:
    """Closed-form estimate of the coupling that maximises flux squeezing.

    Equates the quarter Rabi period with the transit time of a kicked atom
    across the condensate: Ω ≈ π ħ k_kick / (4 m sqrt(2ħ/(m ω_t))).  The
    simulated v(J) minimum, not this estimate, is the ground truth.
    """
    transit_width = np.sqrt(2.0 * hbar / (params.m * params.omega_t))
    return float(np.pi * hbar * params.k_kick / (4.0 * params.m * transit_width))


def single_probe_grid(params: PhysicalParams | None = None,
                      n: int = 512, k_halfwidth: float = 8.0e4) -> MomentumGrid:
    """Default single-probe band: centred on k_kick, half-width ≈ 6 σ_k."""
    p = params or default_params()
    return MomentumGrid(n=n, k_center=p.k_kick, k_halfwidth=k_halfwidth)
