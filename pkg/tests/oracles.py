"""Independent reference computations used to pin expected values.

Everything here deliberately avoids the code paths it checks: the optics
oracle expands states in the Fock basis, the propagator oracles exponentiate
the generator matrices directly, and the moment oracle multiplies truncated
Fock-space operator matrices.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm
from scipy.sparse.linalg import expm_multiply


def displaced_squeezed_number_moments(alpha_sq: float, r: float,
                                      cutoff: int = 2048) -> tuple[float, float]:
    """⟨n⟩ and V(n) of D(α)S(r)|0⟩ with real α = sqrt(alpha_sq), real r.

    S(r) = exp[(r/2)(a² − a†²)] squeezes the X = a + a† quadrature and the
    displacement lies along it.  Built by direct Fock-basis propagation.
    """
    n = np.arange(cutoff)
    lower = sp.diags(np.sqrt(n[1:]), 1)          # a
    raise_ = sp.diags(np.sqrt(n[1:]), -1)        # a†
    vec = np.zeros(cutoff, dtype=complex)
    vec[0] = 1.0
    if r != 0.0:
        vec = expm_multiply(0.5 * r * (lower @ lower - raise_ @ raise_), vec)
    alpha = np.sqrt(alpha_sq)
    if alpha != 0.0:
        vec = expm_multiply(alpha * (raise_ - lower), vec)
    probs = np.abs(vec) ** 2
    norm = probs.sum()
    if norm < 1.0 - 1e-10:
        raise RuntimeError(f"Fock cutoff {cutoff} too small (norm {norm})")
    probs /= norm
    mean = float(probs @ n)
    var = float(probs @ n.astype(float) ** 2 - mean ** 2)
    return mean, var


def single_probe_exact(model, grid, t: float):
    """Exact mode functions via eigendecomposition of the (n+1)² generator.

    The discretised single-probe system is i dU/dt = H U with the Hermitian
    H = [[diag(omega0), −Omega0 √dk], [−Omega0* √dk, omega_a]] acting on the
    unitary embedding; returns (f, g, p, q) at time t.
    """
    n, dk = grid.n, grid.dk
    w0 = model.omega0(grid.k)
    om = np.asarray(model.Omega0(grid.k), dtype=complex)
    h = np.zeros((n + 1, n + 1), dtype=complex)
    h[np.arange(n), np.arange(n)] = w0
    h[:n, n] = -om * np.sqrt(dk)
    h[n, :n] = -om.conj() * np.sqrt(dk)
    h[n, n] = model.omega_a
    lam, vec = np.linalg.eigh(h)
    u = (vec * np.exp(-1j * lam * t)) @ vec.conj().T
    return (u[:n, :n] / dk, u[:n, n] / np.sqrt(dk),
            complex(u[n, n]), u[n, :n] / np.sqrt(dk))


def opo_exact_propagator(model, grid, t: float) -> np.ndarray:
    """Exact doubled-space propagator of the twin-beam system.

    In the frame rotating at omega_a the generator is time independent:
    d/dt [V; V*] = −i [[H, K], [−K*, −H*]] [V; V*] with V = (√dk ψ, b1, b2),
    Hermitian H (dispersion + couplings) and symmetric K (pump χβ between
    b1 and b2†).  Returns S(t) = expm(M t), a 2(n+2) square matrix.
    """
    n, dk = grid.n, grid.dk
    w0 = model.omega0(grid.k)
    om1 = np.asarray(model.Omega1(grid.k), dtype=complex) * np.sqrt(dk)
    om2 = np.asarray(model.Omega2(grid.k), dtype=complex) * np.sqrt(dk)
    m = n + 2
    h = np.zeros((m, m), dtype=complex)
    h[np.arange(n), np.arange(n)] = w0 - model.omega_a
    h[:n, n] = -om1
    h[n, :n] = -om1.conj()
    h[:n, n + 1] = -om2
    h[n + 1, :n] = -om2.conj()
    k = np.zeros((m, m), dtype=complex)
    k[n, n + 1] = model.chi_beta
    k[n + 1, n] = model.chi_beta
    gen = np.block([[h, k], [-k.conj(), -h.conj()]])
    return expm(-1j * gen * t)


def opo_solution_matrix(sol, omega_a: float) -> np.ndarray:
    """Assemble the doubled-space propagator of ``opo_exact_propagator``
    from an OpoSolution (lab frame), for direct comparison."""
    grid = sol.grid
    n, dk = grid.n, grid.dk
    sdk = np.sqrt(dk)
    m = n + 2
    a = np.zeros((m, m), dtype=complex)      # annihilator -> annihilator block
    b = np.zeros((m, m), dtype=complex)      # annihilator -> creator block
    a[:n, :n] = sol.f_plus * dk
    b[:n, :n] = sol.f_minus * dk
    a[:n, n] = sol.g1_plus * sdk
    b[:n, n] = sol.g1_minus * sdk
    a[:n, n + 1] = sol.g2_plus * sdk
    b[:n, n + 1] = sol.g2_minus * sdk
    a[n, :n] = sol.p3_plus * sdk
    b[n, :n] = sol.p3_minus * sdk
    a[n, n], b[n, n] = sol.p1_plus, sol.p1_minus
    a[n, n + 1], b[n, n + 1] = sol.p2_plus, sol.p2_minus
    a[n + 1, :n] = sol.q3_plus * sdk
    b[n + 1, :n] = sol.q3_minus * sdk
    a[n + 1, n], b[n + 1, n] = sol.q1_plus, sol.q1_minus
    a[n + 1, n + 1], b[n + 1, n + 1] = sol.q2_plus, sol.q2_minus
    # oracle frame rotates every operator by e^{i omega_a t}
    phase = np.exp(1j * omega_a * sol.t)
    a *= phase
    b *= phase
    return np.block([[a, b], [b.conj(), a.conj()]])


def fock_mode_operators(n_modes: int, cutoff: int):
    """Dense annihilation operators of an n_modes Fock space (kron ordering)."""
    single = np.diag(np.sqrt(np.arange(1, cutoff)), 1)
    eye = np.eye(cutoff)
    ops = []
    for mode in range(n_modes):
        factors = [single if j == mode else eye for j in range(n_modes)]
        full = factors[0]
        for fac in factors[1:]:
            full = np.kron(full, fac)
        ops.append(full)
    return ops


def brute_force_quadratic_stats(terms, n_modes: int, cutoff: int = 4):
    """Mean and second moments of quadratic observables by matrix algebra.

    ``terms`` is a list of observables, each a list of (weight, (uP, vP),
    (uQ, vQ)) entries meaning weight · P · Q with P = uP·a + vP·a†.  Returns
    (means, covariance matrix ⟨AB⟩ − ⟨A⟩⟨B⟩) evaluated exactly on the vacuum
    (a cutoff of 4 is exact: quadratics reach at most two quanta per factor).
    """
    ops = fock_mode_operators(n_modes, cutoff)
    dim = ops[0].shape[0]
    vac = np.zeros(dim)
    vac[0] = 1.0

    def linear(u, v):
        out = np.zeros((dim, dim), dtype=complex)
        for mu in range(n_modes):
            out += u[mu] * ops[mu] + v[mu] * ops[mu].conj().T
        return out

    mats = []
    for obs_terms in terms:
        total = np.zeros((dim, dim), dtype=complex)
        for w, (up, vp), (uq, vq) in obs_terms:
            total += w * (linear(up, vp) @ linear(uq, vq))
        mats.append(total)
    means = np.array([vac @ (m @ vac) for m in mats])
    cov = np.empty((len(mats), len(mats)), dtype=complex)
    for i, mi in enumerate(mats):
        for j, mj in enumerate(mats):
            cov[i, j] = vac @ (mi @ (mj @ vac)) - means[i] * means[j]
    return means, cov
