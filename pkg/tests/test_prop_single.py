import numpy as np
import pytest
from dataclasses import replace

from atomlaser.model import PhysicalParams, ReducedModel, default_params
from atomlaser.prop_single import (IntegrationError, _SingleSystem, evolve,
                                   initial_solution, step, unitarity_defect,
                                   unitary_matrix)
from atomlaser.grids import MomentumGrid
from oracles import single_probe_exact

P = default_params()
SMALL = MomentumGrid(64, P.k_kick, 8.0e4)


def test_initial_solution_is_identity():
    g = MomentumGrid(8, P.k_kick, 8.0e4)
    s = initial_solution(g)
    np.testing.assert_array_equal(s.f * g.dk, np.eye(8))
    assert np.all(s.g == 0) and np.all(s.q == 0)
    assert s.p == 1.0
    u = unitary_matrix(s)
    np.testing.assert_allclose(u, np.eye(9), atol=1e-15)


def test_free_evolution_is_pure_phase():
    p0 = PhysicalParams(Omega=0.0)
    m0 = ReducedModel(p0)
    g = MomentumGrid(8, p0.k_kick, 8.0e4)
    t = 0.01
    s = evolve(m0, g, t, dt=1e-4, snapshot_times=[t])[0]
    np.testing.assert_allclose(
        s.f, np.diag(np.exp(-1j * m0.omega0(g.k) * t)) / g.dk, atol=1e-12 / g.dk)
    assert s.p == pytest.approx(np.exp(-1j * p0.omega_a * t), abs=1e-12)
    assert np.all(s.g == 0) and np.all(s.q == 0)


@pytest.mark.parametrize("mode,dt,tol", [("interaction", 1e-4, 1e-9),
                                         ("direct", 2e-5, 1e-7)])
def test_agrees_with_eigendecomposition_oracle(mode, dt, tol):
    m = ReducedModel(P)
    t = 0.03
    fe, ge, pe, qe = single_probe_exact(m, SMALL, t)
    s = evolve(m, SMALL, t, dt=dt, snapshot_times=[t], mode=mode)[0]
    assert np.max(np.abs(s.f - fe)) * SMALL.dk < tol
    assert np.max(np.abs(s.g - ge)) < tol
    assert abs(s.p - pe) < tol
    assert np.max(np.abs(s.q - qe)) < tol


def test_interaction_and_direct_modes_agree():
    m = ReducedModel(P)
    t = 0.02
    si = evolve(m, SMALL, t, dt=1e-4, snapshot_times=[t], mode="interaction")[0]
    sd = evolve(m, SMALL, t, dt=1e-5, snapshot_times=[t], mode="direct")[0]
    assert np.max(np.abs(si.f - sd.f)) * SMALL.dk < 1e-6
    assert np.max(np.abs(si.g - sd.g)) < 1e-6
    assert abs(si.p - sd.p) < 1e-6


def test_fast_step_matches_plain_rk4():
    m = ReducedModel(P)
    sys = _SingleSystem(m, SMALL)
    s0 = initial_solution(SMALL)
    a = (s0.f.astype(complex), s0.g.astype(complex), complex(s0.p), s0.q.astype(complex))
    b = a
    t, h = 0.0, 2e-4
    for _ in range(20):
        a = sys.rk4_step(sys.rhs_interaction, t, h, a)
        b = sys.fast_interaction_step(t, h, b)
        t += h
    for ya, yb in zip(a, b):
        assert np.max(np.abs(ya - yb)) < 1e-13


def test_unitarity_preserved():
    m = ReducedModel(P)
    for s in evolve(m, SMALL, 0.11, dt=1e-4, snapshot_times=[0.05, 0.11]):
        assert unitarity_defect(s) < 1e-8


def test_column_independence():
    m = ReducedModel(P)
    g = MomentumGrid(32, P.k_kick, 8.0e4)
    t = 0.01
    full = evolve(m, g, t, dt=1e-4, snapshot_times=[t])[0]
    j = 17
    stripped = initial_solution(g)
    fsel = np.zeros_like(stripped.f)
    fsel[:, j] = stripped.f[:, j]
    start = replace(stripped, f=fsel)
    part = evolve(m, g, t, dt=1e-4, snapshot_times=[t], initial=start)[0]
    np.testing.assert_allclose(part.f[:, j], full.f[:, j], atol=1e-12 / g.dk)
    np.testing.assert_allclose(part.q[j], full.q[j], atol=1e-12)


def test_time_reversal():
    m = ReducedModel(P)
    g = MomentumGrid(16, P.k_kick, 8.0e4)
    s = initial_solution(g)
    n_steps, dt = 40, 2e-5
    for _ in range(n_steps):
        s = step(s, m, dt)
    for _ in range(n_steps):
        s = step(s, m, -dt)
    ref = initial_solution(g)
    assert np.max(np.abs(s.f - ref.f)) * g.dk < 1e-8
    assert abs(s.p - 1.0) < 1e-8
    assert np.max(np.abs(s.g)) < 1e-8


def test_global_phase_covariance():
    g = MomentumGrid(32, P.k_kick, 8.0e4)
    t = 0.01
    plain = evolve(ReducedModel(P), g, t, dt=1e-4, snapshot_times=[t])[0]
    rot = evolve(ReducedModel(P, coupling_phase=0.7), g, t, dt=1e-4,
                 snapshot_times=[t])[0]
    for name in ("f", "g", "q"):
        np.testing.assert_allclose(np.abs(getattr(rot, name)),
                                   np.abs(getattr(plain, name)), atol=1e-12)
    assert abs(abs(rot.p) - abs(plain.p)) < 1e-13


def test_snapshot_times_hit_exactly():
    m = ReducedModel(P)
    times = [0.0031, 0.00777, 0.01]
    sols = evolve(m, SMALL, 0.01, dt=1e-4, snapshot_times=times)
    assert [s.t for s in sols] == times


def test_direct_mode_rejects_unstable_step():
    m = ReducedModel(P)
    with pytest.raises(IntegrationError):
        evolve(m, SMALL, 0.1, dt=0.01, snapshot_times=[0.1], mode="direct")


def test_instability_monitor_raises():
    # huge interaction-picture step -> RK4 blows up on the coupling dynamics
    strong = PhysicalParams(Omega=90.0)
    m = ReducedModel(strong)
    with pytest.raises(IntegrationError):
        evolve(m, SMALL, 40.0, dt=0.05, snapshot_times=[40.0], mode="interaction")


def test_regression_photon_survival():
    # frozen from a dt-halving (Richardson) verified run at n=256
    m = ReducedModel(P)
    g = MomentumGrid(256, P.k_kick, 8.0e4)
    s = evolve(m, g, 0.11, dt=1e-4, snapshot_times=[0.11])[0]
    assert abs(s.p) ** 2 == pytest.approx(6.725860e-13, rel=1e-3)


def test_worker_count_does_not_change_results():
    m = ReducedModel(P)
    t = 0.01
    s1 = evolve(m, SMALL, t, dt=1e-4, snapshot_times=[t], workers=1)[0]
    s2 = evolve(m, SMALL, t, dt=1e-4, snapshot_times=[t], workers=3)[0]
    np.testing.assert_array_equal(s1.f, s2.f)
    np.testing.assert_array_equal(s1.g, s2.g)
    assert s1.p == s2.p
