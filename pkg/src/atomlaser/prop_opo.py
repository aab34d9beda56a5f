"""RK4 integration of the eighteen-function twin-beam (OPO-driven) system.

The pump parametrically couples two optical modes whose photons outcouple
atoms with opposite momentum kicks.  The Heisenberg operators mix creation
and annihilation parts, so every operator is expanded in a Bogoliubov pair
of mode functions (suffix + for the annihilator coefficient, − for the
creator coefficient):

    psi(k,t) = ∫ f±(k,k') {psi_s, psi_s†} dk' + g1±(k) {a1s, a1s†}
               + g2±(k) {a2s, a2s†}
    a1(t)    = p1± {a1s, a1s†} + p2± {a2s, a2s†} + ∫ p3±(k') {psi_s, psi_s†} dk'
    a2(t)    = q1± {a1s, a1s†} + q2± {a2s, a2s†} + ∫ q3±(k') {psi_s, psi_s†} dk'

with initial data f+ = δ(k−k')/dk, p1+ = q2+ = 1, everything else zero.
The coupled equations are

    i df±/dt  = omega0 f± − Omega1 p3± − Omega2 q3±
    i dgj±/dt = omega0 gj± − Omega1 pj± − Omega2 qj±
    i dpj±/dt = omega_a pj± − ∫ Omega1* gj± dk + chi_p qj∓*
    i dqj±/dt = omega_a qj± − ∫ Omega2* gj± dk + chi_p pj∓*

(j = 1, 2 correspond to the a1s/a2s coefficients and j = 3 to the atomic
ones with gj → f), chi_p(t) = χβ e^{−2i omega_a t}.  Note the q-equations
carry Omega2*, not Omega1*: only then does χβ = 0 reduce the system to two
independent single-probe copies and are the Bogoliubov identities

    ∫ (|f+|² − |f−|²) dk' + |g1+|² − |g1−|² + |g2+|² − |g2−|² = 1/dk   (each k)
    |p1+|² − |p1−|² + |p2+|² − |p2−|² + ∫ (|p3+|² − |p3−|²) dk' = 1   (and q)

preserved.  In the interaction frame the pump phase cancels exactly against
the optical phases and the pump coupling is the constant χβ.

The undamped pump makes mode functions grow when outcoupling cannot keep up;
the integrator aborts once the summed optical mode-function magnitude
exceeds ``OPTICAL_NORM_LIMIT``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import ConcatGrid, MomentumGrid
from .model import OpoModel, PhysicalParams, opo_params
from .prop_single import (DEFAULT_DT, RK4_STABILITY, IntegrationError, _axpy,
                          _contains)

OPTICAL_NORM_LIMIT = 1.0e8
_MONITOR_EVERY = 200
_MONITOR_TOL = 1.0e-3

# conj-partner index inside the optical scalar block
# order: [p1+, p1−, p2+, p2−, q1+, q1−, q2+, q2−]
_CHI_PARTNER = np.array([5, 4, 7, 6, 1, 0, 3, 2])


@dataclass(frozen=True)
class OpoSolution:
    """All eighteen mode functions at time t (f[i, j] = f(k_i, k'_j))."""

    t: float
    grid: ConcatGrid | MomentumGrid
    f_plus: np.ndarray
    f_minus: np.ndarray
    g1_plus: np.ndarray
    g1_minus: np.ndarray
    g2_plus: np.ndarray
    g2_minus: np.ndarray
    p1_plus: complex
    p1_minus: complex
    p2_plus: complex
    p2_minus: complex
    q1_plus: complex
    q1_minus: complex
    q2_plus: complex
    q2_minus: complex
    p3_plus: np.ndarray
    p3_minus: np.ndarray
    q3_plus: np.ndarray
    q3_minus: np.ndarray


def twin_beam_grid(params: PhysicalParams | None = None, n_band: int = 256,
                   k_halfwidth: float = 8.0e4) -> ConcatGrid:
    """Two momentum bands around ±k_kick on one concatenated lattice."""
    p = params or opo_params()
    return ConcatGrid((
        MomentumGrid(n=n_band, k_center=-p.k_kick, k_halfwidth=k_halfwidth),
        MomentumGrid(n=n_band, k_center=+p.k_kick, k_halfwidth=k_halfwidth),
    ))


def initial_opo(grid) -> OpoSolution:
    """f+ = identity/dk, p1+ = q2+ = 1, all other functions zero."""
    n = grid.n
    z = np.zeros(n, dtype=complex)
    return OpoSolution(
        t=0.0, grid=grid,
        f_plus=np.eye(n, dtype=complex) / grid.dk,
        f_minus=np.zeros((n, n), dtype=complex),
        g1_plus=z.copy(), g1_minus=z.copy(), g2_plus=z.copy(), g2_minus=z.copy(),
        p1_plus=1.0 + 0.0j, p1_minus=0.0j, p2_plus=0.0j, p2_minus=0.0j,
        q1_plus=0.0j, q1_minus=0.0j, q2_plus=1.0 + 0.0j, q2_minus=0.0j,
        p3_plus=z.copy(), p3_minus=z.copy(), q3_plus=z.copy(), q3_minus=z.copy(),
    )


def bogoliubov_defects(sol: OpoSolution) -> tuple[float, float, float]:
    """(max field-identity defect, a1 identity defect, a2 identity defect).

    All three vanish for the exact flow; the field defect is reported in the
    natural normalisation (row sum times dk minus one).
    """
    dk = sol.grid.dk
    field = (np.sum(np.abs(sol.f_plus) ** 2 - np.abs(sol.f_minus) ** 2, axis=1) * dk
             + np.abs(sol.g1_plus) ** 2 - np.abs(sol.g1_minus) ** 2
             + np.abs(sol.g2_plus) ** 2 - np.abs(sol.g2_minus) ** 2)
    field_defect = float(np.max(np.abs(field * dk - 1.0)))

    def optical(one_p, one_m, two_p, two_m, vec_p, vec_m):
        return (abs(one_p) ** 2 - abs(one_m) ** 2 + abs(two_p) ** 2 - abs(two_m) ** 2
                + dk * float(np.sum(np.abs(vec_p) ** 2 - np.abs(vec_m) ** 2)))

    a1 = optical(sol.p1_plus, sol.p1_minus, sol.p2_plus, sol.p2_minus,
                 sol.p3_plus, sol.p3_minus)
    a2 = optical(sol.q1_plus, sol.q1_minus, sol.q2_plus, sol.q2_minus,
                 sol.q3_plus, sol.q3_minus)
    return field_defect, float(abs(a1 - 1.0)), float(abs(a2 - 1.0))


class _OpoSystem:
    """Grid-sampled coefficients and both RK4 frames for the OPO system.

    State layout: (fp, fm, G, P, p3p, p3m, q3p, q3m) where G stacks the four
    g-functions as rows [g1+, g1−, g2+, g2−] and P holds the eight optical
    scalars in the order of ``_CHI_PARTNER``.
    """

    def __init__(self, model: OpoModel, grid):
        self.grid = grid
        self.dk = grid.dk
        self.w0 = model.omega0(grid.k).astype(float)
        self.wa = float(model.omega_a)
        self.chi = float(model.chi_beta)
        self.Om1 = np.asarray(model.Omega1(grid.k), dtype=complex)
        self.Om2 = np.asarray(model.Omega2(grid.k), dtype=complex)
        self.wrel = self.w0 - self.wa
        self.model = model

    def couplings(self, t: float):
        ph = np.exp(1j * self.wrel * t)
        return self.Om1 * ph, self.Om2 * ph

    # --- plain right-hand sides (reference and direct frame) -----------------

    def rhs_interaction(self, t, fp, fm, G, P, p3p, p3m, q3p, q3m):
        c1, c2 = self.couplings(t)
        dk, chi = self.dk, self.chi
        dfp = 1j * (c1[:, None] * p3p[None, :] + c2[:, None] * q3p[None, :])
        dfm = 1j * (c1[:, None] * p3m[None, :] + c2[:, None] * q3m[None, :])
        dG = 1j * (P[:4, None] * c1[None, :] + P[4:, None] * c2[None, :])
        dP = np.empty(8, dtype=complex)
        dP[:4] = 1j * dk * (G @ c1.conj())
        dP[4:] = 1j * dk * (G @ c2.conj())
        dP -= 1j * chi * P[_CHI_PARTNER].conj()
        dp3p = 1j * dk * (c1.conj() @ fp) - 1j * chi * q3m.conj()
        dp3m = 1j * dk * (c1.conj() @ fm) - 1j * chi * q3p.conj()
        dq3p = 1j * dk * (c2.conj() @ fp) - 1j * chi * p3m.conj()
        dq3m = 1j * dk * (c2.conj() @ fm) - 1j * chi * p3p.conj()
        return dfp, dfm, dG, dP, dp3p, dp3m, dq3p, dq3m

    def rhs_direct(self, t, fp, fm, G, P, p3p, p3m, q3p, q3m):
        dk = self.dk
        chi_p = self.model.chi_p(t)
        dfp = -1j * (self.w0[:, None] * fp
                     - self.Om1[:, None] * p3p[None, :]
                     - self.Om2[:, None] * q3p[None, :])
        dfm = -1j * (self.w0[:, None] * fm
                     - self.Om1[:, None] * p3m[None, :]
                     - self.Om2[:, None] * q3m[None, :])
        dG = -1j * (self.w0[None, :] * G
                    - P[:4, None] * self.Om1[None, :]
                    - P[4:, None] * self.Om2[None, :])
        dP = np.empty(8, dtype=complex)
        dP[:4] = dk * (G @ self.Om1.conj())
        dP[4:] = dk * (G @ self.Om2.conj())
        dP = -1j * (self.wa * P - dP + chi_p * P[_CHI_PARTNER].conj())
        dp3p = -1j * (self.wa * p3p - dk * (self.Om1.conj() @ fp) + chi_p * q3m.conj())
        dp3m = -1j * (self.wa * p3m - dk * (self.Om1.conj() @ fm) + chi_p * q3p.conj())
        dq3p = -1j * (self.wa * q3p - dk * (self.Om2.conj() @ fp) + chi_p * p3m.conj())
        dq3m = -1j * (self.wa * q3m - dk * (self.Om2.conj() @ fm) + chi_p * p3p.conj())
        return dfp, dfm, dG, dP, dp3p, dp3m, dq3p, dq3m

    def rk4_step(self, rhs, t, h, state):
        k1 = rhs(t, *state)
        k2 = rhs(t + h / 2, *_axpy(state, k1, h / 2))
        k3 = rhs(t + h / 2, *_axpy(state, k2, h / 2))
        k4 = rhs(t + h, *_axpy(state, k3, h))
        return tuple(
            y + (h / 6) * (a + 2 * b + 2 * c + d)
            for y, a, b, c, d in zip(state, k1, k2, k3, k4))

    # --- collapsed interaction step ------------------------------------------

    def fast_interaction_step(self, t, h, state):
        """Interaction-frame RK4 step, algebraically identical to rk4_step.

        The f±-derivatives are rank two (c1 ⊗ p3 + c2 ⊗ q3), so stage values
        of f± reduce to scalar corrections dk⟨c_x, c_y⟩ and the f±-updates to
        single (n×6)(6×n) products.
        """
        fp, fm, G, P, p3p, p3m, q3p, q3m = state
        dk, chi = self.dk, self.chi
        c1a, c2a = self.couplings(t)
        c1b, c2b = self.couplings(t + h / 2)
        c1c, c2c = self.couplings(t + h)
        # kernel matrix columns: [1a, 1b, 1c, 2a, 2b, 2c]
        cmat = np.stack([c1a, c1b, c1c, c2a, c2b, c2c], axis=1)
        up = dk * (cmat.conj().T @ fp)
        um = dk * (cmat.conj().T @ fm)
        s = dk * (cmat.conj().T @ cmat)

        def scalar_derivs(c1, c2, Gs, Ps):
            dP = np.empty(8, dtype=complex)
            dP[:4] = 1j * dk * (Gs @ c1.conj())
            dP[4:] = 1j * dk * (Gs @ c2.conj())
            dP -= 1j * chi * Ps[_CHI_PARTNER].conj()
            dG = 1j * (Ps[:4, None] * c1[None, :] + Ps[4:, None] * c2[None, :])
            return dG, dP

        # stage 1
        k1_p3p = 1j * up[0] - 1j * chi * q3m.conj()
        k1_p3m = 1j * um[0] - 1j * chi * q3p.conj()
        k1_q3p = 1j * up[3] - 1j * chi * p3m.conj()
        k1_q3m = 1j * um[3] - 1j * chi * p3p.conj()
        k1_G, k1_P = scalar_derivs(c1a, c2a, G, P)

        # stage 2 (time t + h/2; f-stage value f + h/2 k1_f)
        p3p2 = p3p + (h / 2) * k1_p3p
        p3m2 = p3m + (h / 2) * k1_p3m
        q3p2 = q3p + (h / 2) * k1_q3p
        q3m2 = q3m + (h / 2) * k1_q3m
        G2 = G + (h / 2) * k1_G
        P2 = P + (h / 2) * k1_P
        k2_p3p = 1j * up[1] - (h / 2) * (s[1, 0] * p3p + s[1, 3] * q3p) - 1j * chi * q3m2.conj()
        k2_p3m = 1j * um[1] - (h / 2) * (s[1, 0] * p3m + s[1, 3] * q3m) - 1j * chi * q3p2.conj()
        k2_q3p = 1j * up[4] - (h / 2) * (s[4, 0] * p3p + s[4, 3] * q3p) - 1j * chi * p3m2.conj()
        k2_q3m = 1j * um[4] - (h / 2) * (s[4, 0] * p3m + s[4, 3] * q3m) - 1j * chi * p3p2.conj()
        k2_G, k2_P = scalar_derivs(c1b, c2b, G2, P2)

        # stage 3 (time t + h/2; f-stage value f + h/2 k2_f)
        p3p3 = p3p + (h / 2) * k2_p3p
        p3m3 = p3m + (h / 2) * k2_p3m
        q3p3 = q3p + (h / 2) * k2_q3p
        q3m3 = q3m + (h / 2) * k2_q3m
        G3 = G + (h / 2) * k2_G
        P3 = P + (h / 2) * k2_P
        k3_p3p = 1j * up[1] - (h / 2) * (s[1, 1] * p3p2 + s[1, 4] * q3p2) - 1j * chi * q3m3.conj()
        k3_p3m = 1j * um[1] - (h / 2) * (s[1, 1] * p3m2 + s[1, 4] * q3m2) - 1j * chi * q3p3.conj()
        k3_q3p = 1j * up[4] - (h / 2) * (s[4, 1] * p3p2 + s[4, 4] * q3p2) - 1j * chi * p3m3.conj()
        k3_q3m = 1j * um[4] - (h / 2) * (s[4, 1] * p3m2 + s[4, 4] * q3m2) - 1j * chi * p3p3.conj()
        k3_G, k3_P = scalar_derivs(c1b, c2b, G3, P3)

        # stage 4 (time t + h; f-stage value f + h k3_f)
        p3p4 = p3p + h * k3_p3p
        p3m4 = p3m + h * k3_p3m
        q3p4 = q3p + h * k3_q3p
        q3m4 = q3m + h * k3_q3m
        G4 = G + h * k3_G
        P4 = P + h * k3_P
        k4_p3p = 1j * up[2] - h * (s[2, 1] * p3p3 + s[2, 4] * q3p3) - 1j * chi * q3m4.conj()
        k4_p3m = 1j * um[2] - h * (s[2, 1] * p3m3 + s[2, 4] * q3m3) - 1j * chi * q3p4.conj()
        k4_q3p = 1j * up[5] - h * (s[5, 1] * p3p3 + s[5, 4] * q3p3) - 1j * chi * p3m4.conj()
        k4_q3m = 1j * um[5] - h * (s[5, 1] * p3m3 + s[5, 4] * q3m3) - 1j * chi * p3p4.conj()
        k4_G, k4_P = scalar_derivs(c1c, c2c, G4, P4)

        def combine(y, k1, k2, k3, k4):
            return y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)

        rows_p = np.stack([p3p, 2.0 * (p3p2 + p3p3), p3p4,
                           q3p, 2.0 * (q3p2 + q3p3), q3p4], axis=0)
        rows_m = np.stack([p3m, 2.0 * (p3m2 + p3m3), p3m4,
                           q3m, 2.0 * (q3m2 + q3m3), q3m4], axis=0)
        fp_n = fp + (1j * h / 6) * (cmat @ rows_p)
        fm_n = fm + (1j * h / 6) * (cmat @ rows_m)
        return (fp_n, fm_n,
                combine(G, k1_G, k2_G, k3_G, k4_G),
                combine(P, k1_P, k2_P, k3_P, k4_P),
                combine(p3p, k1_p3p, k2_p3p, k3_p3p, k4_p3p),
                combine(p3m, k1_p3m, k2_p3m, k3_p3m, k4_p3m),
                combine(q3p, k1_q3p, k2_q3p, k3_q3p, k4_q3p),
                combine(q3m, k1_q3m, k2_q3m, k3_q3m, k4_q3m))

    # --- frame conversion and health ------------------------------------------

    def pack(self, sol: OpoSolution, interaction: bool):
        G = np.stack([sol.g1_plus, sol.g1_minus, sol.g2_plus, sol.g2_minus])
        P = np.array([sol.p1_plus, sol.p1_minus, sol.p2_plus, sol.p2_minus,
                      sol.q1_plus, sol.q1_minus, sol.q2_plus, sol.q2_minus],
                     dtype=complex)
        fp = sol.f_plus.astype(complex)
        fm = sol.f_minus.astype(complex)
        p3p, p3m = sol.p3_plus.astype(complex), sol.p3_minus.astype(complex)
        q3p, q3m = sol.q3_plus.astype(complex), sol.q3_minus.astype(complex)
        if interaction:
            row = np.exp(1j * self.w0 * sol.t)
            pha = np.exp(1j * self.wa * sol.t)
            fp, fm = row[:, None] * fp, row[:, None] * fm
            G = row[None, :] * G
            P = pha * P
            p3p, p3m, q3p, q3m = pha * p3p, pha * p3m, pha * q3p, pha * q3m
        return [fp, fm, G, P, p3p, p3m, q3p, q3m]

    def to_lab(self, t, state, interaction: bool) -> OpoSolution:
        fp, fm, G, P, p3p, p3m, q3p, q3m = state
        if interaction:
            row = np.exp(-1j * self.w0 * t)
            pha = np.exp(-1j * self.wa * t)
            fp, fm = row[:, None] * fp, row[:, None] * fm
            G = row[None, :] * G
            P = pha * P
            p3p, p3m, q3p, q3m = pha * p3p, pha * p3m, pha * q3p, pha * q3m
        else:
            fp, fm, G = fp.copy(), fm.copy(), G.copy()
            p3p, p3m, q3p, q3m = p3p.copy(), p3m.copy(), q3p.copy(), q3m.copy()
        return OpoSolution(
            t=t, grid=self.grid, f_plus=fp, f_minus=fm,
            g1_plus=G[0], g1_minus=G[1], g2_plus=G[2], g2_minus=G[3],
            p1_plus=complex(P[0]), p1_minus=complex(P[1]),
            p2_plus=complex(P[2]), p2_minus=complex(P[3]),
            q1_plus=complex(P[4]), q1_minus=complex(P[5]),
            q2_plus=complex(P[6]), q2_minus=complex(P[7]),
            p3_plus=p3p, p3_minus=p3m, q3_plus=q3p, q3_minus=q3m)

    def check_health(self, state):
        _, _, _, P, p3p, p3m, q3p, q3m = state
        dk = self.dk
        mag = (float(np.sum(np.abs(P) ** 2))
               + dk * float(np.sum(np.abs(p3p) ** 2 + np.abs(p3m) ** 2
                                   + np.abs(q3p) ** 2 + np.abs(q3m) ** 2)))
        if not np.isfinite(mag):
            raise IntegrationError("non-finite optical mode functions")
        if mag > OPTICAL_NORM_LIMIT:
            raise IntegrationError(
                f"optical Bogoliubov norm {mag:.3g} exceeds {OPTICAL_NORM_LIMIT:.0e}; "
                "shorten the horizon or reduce chi_beta")
        signed = (abs(P[0]) ** 2 - abs(P[1]) ** 2 + abs(P[2]) ** 2 - abs(P[3]) ** 2
                  + dk * float(np.sum(np.abs(p3p) ** 2 - np.abs(p3m) ** 2)))
        if abs(signed - 1.0) > _MONITOR_TOL * max(1.0, mag):
            raise IntegrationError(
                f"a1 Bogoliubov identity drifted to {signed!r}; reduce the step size")


def step_opo(sol: OpoSolution, model: OpoModel, dt: float) -> OpoSolution:
    """One lab-frame RK4 step of all eighteen mode functions."""
    sys = _OpoSystem(model, sol.grid)
    bound = abs(dt) * float(np.max(np.abs(sys.w0)))
    if bound > RK4_STABILITY:
        raise IntegrationError(
            f"dt*max|omega0| = {bound:.3g} exceeds the RK4 stability bound")
    state = sys.pack(sol, interaction=False)
    state = sys.rk4_step(sys.rhs_direct, sol.t, dt, state)
    return sys.to_lab(sol.t + dt, state, interaction=False)


def evolve_opo(model: OpoModel, grid, t_final: float, dt: float | None = None,
               snapshot_times=(), mode: str = "interaction", observer=None,
               observe_times=(), initial: OpoSolution | None = None
               ) -> list[OpoSolution]:
    """Propagate the OPO system; same contract as prop_single.evolve."""
    if mode not in DEFAULT_DT:
        raise ValueError(f"unknown integration mode {mode!r}")
    h0 = DEFAULT_DT[mode] if dt is None else float(dt)
    if h0 <= 0:
        raise ValueError("dt must be positive")

    snapshot_times = sorted(float(t) for t in snapshot_times)
    observe_times = sorted(float(t) for t in observe_times)
    for t in snapshot_times + observe_times:
        if t < -1e-15 or t > t_final * (1 + 1e-12) + 1e-15:
            raise ValueError(f"requested time {t} outside [0, {t_final}]")
    events = sorted({*snapshot_times, *observe_times, float(t_final)})

    sys = _OpoSystem(model, grid)
    if mode == "direct":
        bound = h0 * float(np.max(np.abs(sys.w0)))
        if bound > RK4_STABILITY:
            raise IntegrationError(
                f"dt*max|omega0| = {bound:.3g} exceeds the RK4 stability bound")
        take_step = lambda t, h, state: sys.rk4_step(sys.rhs_direct, t, h, state)
    else:
        take_step = sys.fast_interaction_step

    start = initial or initial_opo(grid)
    t = float(start.t)
    state = sys.pack(start, interaction=(mode == "interaction"))

    snapshots = []
    steps_since_check = 0

    def emit(time):
        sol = sys.to_lab(time, state, interaction=(mode == "interaction"))
        if observer is not None and _contains(observe_times, time):
            observer(sol)
        if _contains(snapshot_times, time):
            snapshots.append(sol)

    if _contains(events, t):
        emit(t)
    for target in events:
        if target <= t + 1e-15:
            continue
        while True:
            gap = target - t
            if gap <= 1e-12 * max(1.0, abs(target)):
                break
            h = gap if gap <= h0 * (1 + 1e-9) else h0
            state = take_step(t, h, state)
            t += h
            steps_since_check += 1
            if steps_since_check >= _MONITOR_EVERY:
                sys.check_health(state)
                steps_since_check = 0
        t = target
        emit(t)
    sys.check_health(state)
    return snapshots
