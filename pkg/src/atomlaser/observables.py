"""Observables of the outcoupled atomic field.

Single-probe scenario (initial state |light⟩ ⊗ atomic vacuum): the density,
number and flux statistics have closed forms in the mode functions,

    ⟨Ψ†(x)Ψ(x)⟩ = |G(x)|² ⟨n⟩,           G(x) = (2π)^{-1/2} ∫ g(k) e^{ikx} dk
    ⟨N⟩  = N_G ⟨n⟩,                        N_G = ∫ |G|² dx = ∫ |g|² dk
    V(N) = N_G² V(n) + N_G (1 − N_G) ⟨n⟩
    ⟨J(x)⟩ = J_g(x) ⟨n⟩,                  J_g = (ħ/m) Im(G* ∂G)
    V(J)  = J_g² V(n) + ⟨n⟩ ∫ J_gf J_fg dk',   J_gf = conj(J_fg),
    J_fg(x,k') = (iħ/2m)(∂F*(x,k') G − F*(x,k') ∂G)

and the state-independent squeezing measure is
v(J) = ∫J_gf J_fg dk' / (J_g² + ∫J_gf J_fg dk').

Twin-beam scenario (everything starts in vacuum): the state is zero-mean
Gaussian, so all observables reduce to Wick contractions of the two-point
kernels

    n(x,x') = ⟨Ψ†(x)Ψ(x')⟩ = ∫F₋*(x)F₋(x') dk' + G₁₋*(x)G₁₋(x') + G₂₋*(x)G₂₋(x')
    m(x,x') = ⟨Ψ(x)Ψ(x')⟩  = ∫F₊(x)F₋(x') dk' + G₁₊(x)G₁₋(x') + G₂₊(x)G₂₋(x')

plus the commutator (anti-normal) kernel, all carried by ``GaussianKernels``.
Fluxes and their covariances are evaluated through the generic vacuum-Wick
engine in ``wick``; EPR quadratures are window-integrated linear forms computed
exactly in momentum space (the hard-edged window transforms in closed form,
so no position sampling of the fast beam carriers is ever needed).  Momentum
components of the window outside the represented bands never couple to the
dynamics and stay vacuum; they are carried as explicit spectator modes so
that the quadrature commutator keeps its exact continuum value
∫|L±|² dx = 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import hbar

from .grids import GridField, MomentumGrid, PositionGrid, fourier_kernel
from .model import PhysicalParams
from .optics import OpticalStateMoments
from .prop_opo import OpoSolution
from .prop_single import SingleModeSolution
from .wick import (LinearForm, QuadraticForm, linear_covariance, linear_variance,
                   pair, quad_covariance, quad_variance)


# --------------------------------------------------------------------------
# single-probe observables
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class NumberStats:
    mean: float
    variance: float
    relative: float | None      # v(N) = V(N)/⟨N⟩, absent while nothing is outcoupled


@dataclass(frozen=True)
class FluxVariance:
    photon_term: float          # J_g² V(n)
    beat_term: float            # ⟨n⟩ ∫ J_gf J_fg dk'
    total: float


def _g_at(sol: SingleModeSolution, x0: float, derivative: int = 0) -> complex:
    row = fourier_kernel(sol.grid, x0, derivative=derivative)[0]
    return complex(row @ sol.g)


def outcoupled_fraction(sol: SingleModeSolution) -> float:
    """N_G = ∫|g|² dk, the outcoupled number per probe photon."""
    return float(sol.grid.dk * np.sum(np.abs(sol.g) ** 2))


def density_single(sol: SingleModeSolution, state: OpticalStateMoments,
                   xgrid: PositionGrid | None = None) -> GridField:
    """⟨Ψ†(x)Ψ(x)⟩ = |G(x)|² ⟨n⟩ on the conjugate position lattice."""
    if xgrid is None:
        xgrid = sol.grid.position_grid()
    big_g = fourier_kernel(sol.grid, xgrid.x) @ sol.g
    return GridField(xgrid, np.abs(big_g) ** 2 * state.mean_n)


def number_stats(sol: SingleModeSolution, state: OpticalStateMoments) -> NumberStats:
    """Mean and variance of the outcoupled atom number."""
    ng = outcoupled_fraction(sol)
    mean = ng * state.mean_n
    variance = ng ** 2 * state.var_n + ng * (1.0 - ng) * state.mean_n
    rel = variance / mean if mean > 0 else None
    return NumberStats(mean=mean, variance=variance, relative=rel)


def flux_mean(sol: SingleModeSolution, state: OpticalStateMoments, x0: float,
              params: PhysicalParams) -> float:
    """⟨J(x0)⟩ = J_g(x0) ⟨n⟩ in atoms/s."""
    g0 = _g_at(sol, x0)
    g1 = _g_at(sol, x0, derivative=1)
    jg = (hbar / params.m) * float(np.imag(np.conj(g0) * g1))
    return jg * state.mean_n


def _flux_pieces(sol: SingleModeSolution, x0: float, params: PhysicalParams):
    """J_g(x0) and the beat integral ∫ J_gf J_fg dk' = ∫ |J_fg|² dk'."""
    row0 = fourier_kernel(sol.grid, x0)[0]
    row1 = fourier_kernel(sol.grid, x0, derivative=1)[0]
    g0 = complex(row0 @ sol.g)
    g1 = complex(row1 @ sol.g)
    f0 = row0 @ sol.f
    f1 = row1 @ sol.f
    jg = (hbar / params.m) * float(np.imag(np.conj(g0) * g1))
    jfg = (0.5j * hbar / params.m) * (f1.conj() * g0 - f0.conj() * g1)
    beat = sol.grid.dk * float(np.sum(np.abs(jfg) ** 2))
    return jg, beat


def flux_variance_single(sol: SingleModeSolution, state: OpticalStateMoments,
                         x0: float, params: PhysicalParams) -> FluxVariance:
    """Both terms of V(J(x0)) and their sum, in (atoms/s)²."""
    jg, beat = _flux_pieces(sol, x0, params)
    return FluxVariance(photon_term=jg ** 2 * state.var_n,
                        beat_term=state.mean_n * beat,
                        total=jg ** 2 * state.var_n + state.mean_n * beat)


def v_of_J(sol: SingleModeSolution, x0: float,
           params: PhysicalParams) -> float | None:
    """Fock-normalised flux noise ∫J_gf J_fg dk / (J_g² + ∫J_gf J_fg dk) ∈ [0, 1].

    Absent (None) at instants with no flux at all.
    """
    jg, beat = _flux_pieces(sol, x0, params)
    denom = jg ** 2 + beat
    if denom <= 0.0:
        return None
    return beat / denom


def coherent_noise_ratio(sol: SingleModeSolution, x0: float,
                         params: PhysicalParams) -> float | None:
    """(J_g² + ∫J_gf J_fg dk)/J_g: coherent-input flux variance per unit flux."""
    jg, beat = _flux_pieces(sol, x0, params)
    if jg == 0.0:
        return None
    return (jg ** 2 + beat) / jg


# --------------------------------------------------------------------------
# twin-beam Gaussian state: kernels and Wick contractions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianKernels:
    """Wick data of the zero-mean Gaussian state at a list of positions.

    ``u``/``v`` hold the annihilator/creator coefficient stacks of Ψ(x_i)
    (slot 0) and ∂Ψ(x_i) (slot 1) over the n+2 initial modes; every two-point
    kernel is a contraction of them.
    """

    points: np.ndarray
    solution: OpoSolution
    u: np.ndarray               # shape (2, npoints, n+2)
    v: np.ndarray

    def n(self, d1: int = 0, d2: int = 0) -> np.ndarray:
        """⟨(∂^d1 Ψ)†(x) (∂^d2 Ψ)(x')⟩ over the point list."""
        return self.v[d1].conj() @ self.v[d2].T

    def m(self, d1: int = 0, d2: int = 0) -> np.ndarray:
        """⟨(∂^d1 Ψ)(x) (∂^d2 Ψ)(x')⟩."""
        return self.u[d1] @ self.v[d2].T

    def anti(self, d1: int = 0, d2: int = 0) -> np.ndarray:
        """⟨(∂^d1 Ψ)(x) (∂^d2 Ψ)†(x')⟩ (carries the commutator term)."""
        return self.u[d1] @ self.u[d2].conj().T

    @property
    def n_kernel(self) -> np.ndarray:
        return self.n(0, 0)

    @property
    def m_kernel(self) -> np.ndarray:
        return self.m(0, 0)

    def density(self) -> np.ndarray:
        """ρ(x_i) = n(x_i, x_i), real and non-negative."""
        return np.real(np.einsum("pm,pm->p", self.v[0].conj(), self.v[0]))

    def index_of(self, x: float) -> int:
        i = int(np.argmin(np.abs(self.points - x)))
        scale = max(abs(x), 1.0e-12)
        if abs(self.points[i] - x) > 1e-9 * scale:
            raise ValueError(f"point {x} is not among the kernel points")
        return i

    def field_form(self, i: int, derivative: int = 0) -> LinearForm:
        return LinearForm(self.u[derivative, i], self.v[derivative, i])


def build_kernels(sol: OpoSolution, points) -> GaussianKernels:
    """Assemble the kernels of the twin-beam state at the given positions."""
    xs = np.atleast_1d(np.asarray(points, dtype=float))
    grid = sol.grid
    sdk = np.sqrt(grid.dk)
    npts = len(xs)
    u = np.empty((2, npts, grid.n + 2), dtype=complex)
    v = np.empty_like(u)
    for d in (0, 1):
        kern = fourier_kernel(grid, xs, derivative=d)
        u[d, :, :grid.n] = (kern @ sol.f_plus) * sdk
        v[d, :, :grid.n] = (kern @ sol.f_minus) * sdk
        u[d, :, grid.n] = kern @ sol.g1_plus
        v[d, :, grid.n] = kern @ sol.g1_minus
        u[d, :, grid.n + 1] = kern @ sol.g2_plus
        v[d, :, grid.n + 1] = kern @ sol.g2_minus
    return GaussianKernels(points=xs, solution=sol, u=u, v=v)


def density_twin(sol: OpoSolution, points) -> np.ndarray:
    """ρ(x) = ∫|F₋|² dk' + |G₁₋|² + |G₂₋|² at the given positions."""
    return build_kernels(sol, points).density()


def _flux_form(kern: GaussianKernels, i: int, params: PhysicalParams) -> QuadraticForm:
    w = 0.5j * hbar / params.m
    psi = kern.field_form(i, 0)
    dpsi = kern.field_form(i, 1)
    return QuadraticForm(((w, dpsi.dagger(), psi), (-w, psi.dagger(), dpsi)))


@dataclass(frozen=True)
class FluxDifference:
    difference_variance: float          # V(J(x0) − J(−x0))
    uncorrelated_baseline: float        # 2 V(J(x0))
    ratio: float | None
    mean_flux: float                    # ⟨J(x0)⟩


def flux_difference_variance(kern: GaussianKernels, x0: float,
                             params: PhysicalParams) -> FluxDifference:
    """Variance of the twin-beam flux difference against the uncorrelated baseline.

    Each beam's flux is counted along its own propagation direction (the
    leftward beam at −x0 has a negative signed current), so the difference
    of the two beam fluxes is J(x0) − (−J(−x0)); for uncorrelated beams its
    variance is the baseline 2V(J(x0)), and pair-correlated beams fall below
    it.
    """
    jp = _flux_form(kern, kern.index_of(+x0), params)
    jm = _flux_form(kern, kern.index_of(-x0), params)
    vp = quad_variance(jp)
    vm = quad_variance(jm)
    cross = np.real(quad_covariance(jp, jm))
    vdiff = vp + vm + 2.0 * cross        # rate difference = J(x0) + J(−x0) signed
    baseline = 2.0 * vp
    ratio = vdiff / baseline if baseline > 0 else None
    return FluxDifference(difference_variance=float(vdiff),
                          uncorrelated_baseline=float(baseline),
                          ratio=ratio,
                          mean_flux=float(np.real(jp.mean())))


# --------------------------------------------------------------------------
# EPR quadratures
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class EprWindow:
    """Top-hat quadrature windows ±[x2, x1] with plane-wave carriers.

    The right window [x2, x1] carries e^{i(k_carrier·x − ω_a t)}; the left
    window [−x1, −x2] carries e^{−i k_carrier·x} by default so that it
    overlaps the leftward beam (set literal_carrier=True to use the same
    rightward carrier on both windows, which is orthogonal to the left beam).
    """

    x1: float
    x2: float
    k_carrier: float
    omega_a: float
    literal_carrier: bool = False

    def __post_init__(self):
        if not (self.x1 > self.x2 > 0):
            raise ValueError("need x1 > x2 > 0")

    @property
    def width(self) -> float:
        return self.x1 - self.x2

    def transform(self, k: np.ndarray, side: int, t: float) -> np.ndarray:
        """W(k) = (2π)^{-1/2} ∫_window L*(x) e^{ikx} dx (closed form)."""
        carrier = self.k_carrier if (side > 0 or self.literal_carrier) else -self.k_carrier
        centre = (self.x1 + self.x2) / 2.0 * (1 if side > 0 else -1)
        w = self.width
        kappa = np.asarray(k, dtype=float) - carrier
        box = w * np.exp(1j * kappa * centre) * np.sinc(kappa * w / (2.0 * np.pi))
        return np.exp(1j * self.omega_a * t) * box / np.sqrt(2.0 * np.pi * w)


@dataclass(frozen=True)
class EprResult:
    VX_minus: float
    VY_minus: float
    VX_plus: float
    VY_plus: float
    Vinf_X_minus: float | None
    Vinf_Y_minus: float | None
    product: float | None               # Vinf(X₋) Vinf(Y₋); < 1 certifies entanglement
    plain_product: float                # V(X₋) V(Y₋), bounded below by 1


def _window_forms(sol: OpoSolution, window: EprWindow) -> tuple[LinearForm, LinearForm]:
    """Annihilation parts A± = ∫ L±* Ψ dx as forms over n+2 band modes + 2 spectators.

    The spectator block restores the out-of-band vacuum weight of each window
    so that [A, A†] keeps its continuum value ∫|L|²dx = 1 exactly.
    """
    grid = sol.grid
    dk = grid.dk
    n = grid.n
    wplus = window.transform(grid.k, +1, sol.t)
    wminus = window.transform(grid.k, -1, sol.t)

    forms = []
    for wvec in (wplus, wminus):
        u = np.zeros(n + 4, dtype=complex)
        v = np.zeros(n + 4, dtype=complex)
        row = wvec * dk                          # ∫ W(k) … dk as a lattice sum
        u[:n] = (row @ sol.f_plus) * np.sqrt(dk)
        v[:n] = (row @ sol.f_minus) * np.sqrt(dk)
        u[n] = row @ sol.g1_plus
        v[n] = row @ sol.g1_minus
        u[n + 1] = row @ sol.g2_plus
        v[n + 1] = row @ sol.g2_minus
        forms.append([u, v])

    # spectator Gram: G_ab = ∫|L|²dx δ_ab − Σ_band W_a W_b* dk
    gram = np.empty((2, 2), dtype=complex)
    for a, wa in enumerate((wplus, wminus)):
        for b, wb in enumerate((wplus, wminus)):
            gram[a, b] = (1.0 if a == b else 0.0) - dk * np.sum(wa * wb.conj())
    vals, vecs = np.linalg.eigh(gram)
    factor = vecs * np.sqrt(np.clip(vals, 0.0, None))
    phase = np.exp(1j * window.omega_a * sol.t)
    for a in range(2):
        forms[a][0][n + 2:] = phase * factor[a]

    a_plus = LinearForm(forms[0][0], forms[0][1])
    a_minus = LinearForm(forms[1][0], forms[1][1])
    return a_plus, a_minus


def quadratures(sol: OpoSolution, window: EprWindow):
    """Hermitian quadratures (X₊, Y₊, X₋, Y₋) of the two beams."""
    a_plus, a_minus = _window_forms(sol, window)
    xp = a_plus + a_plus.dagger()
    yp = (1j * a_plus) + (1j * a_plus).dagger()
    xm = a_minus + a_minus.dagger()
    ym = (1j * a_minus) + (1j * a_minus).dagger()
    return xp, yp, xm, ym


def epr_inference(kern: GaussianKernels, window: EprWindow) -> EprResult:
    """Reid inferred-variance product for the twin beams.

    X₋ (Y₋) is inferred from Y₊ (X₊); the correlations sit between conjugate
    quadratures of opposite beams.  Entanglement is certified when the
    product of inferred variances drops below one.
    """
    xp, yp, xm, ym = quadratures(kern.solution, window)
    vxp = linear_variance(xp)
    vyp = linear_variance(yp)
    vxm = linear_variance(xm)
    vym = linear_variance(ym)

    vinf_x = None
    if vyp > 0:
        vinf_x = vxm - linear_covariance(xm, yp) ** 2 / vyp
    vinf_y = None
    if vxp > 0:
        vinf_y = vym - linear_covariance(ym, xp) ** 2 / vxp
    product = vinf_x * vinf_y if (vinf_x is not None and vinf_y is not None) else None
    return EprResult(VX_minus=vxm, VY_minus=vym, VX_plus=vxp, VY_plus=vyp,
                     Vinf_X_minus=vinf_x, Vinf_Y_minus=vinf_y,
                     product=product, plain_product=vxm * vym)
