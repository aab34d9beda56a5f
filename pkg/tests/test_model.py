import numpy as np
import pytest
from scipy.constants import hbar

from atomlaser.grids import GridError, GridField, MomentumGrid, integrate
from atomlaser.model import (OpoModel, PhysicalParams, ReducedModel,
                             condensate_phi0, default_params, opo_params,
                             optimal_omega_estimate, single_probe_grid)


def test_default_params_values():
    p = default_params()
    assert p.m == 1.4e-25
    assert p.omega_t == 0.25
    assert p.k_kick == 1.6e7
    assert p.Omega == 90.0
    assert p.omega_a == 20.0
    assert p.chi_beta == 0.0


def test_opo_params_overrides():
    p = opo_params()
    assert p.Omega == 108.0
    assert p.chi_beta == 80.0
    assert p.m == 1.4e-25


def test_params_validation():
    with pytest.raises(ValueError):
        PhysicalParams(m=-1.0)
    with pytest.raises(ValueError):
        PhysicalParams(Omega=-5.0)


def test_resonance_identity_exact():
    for omega_a in (20.0, 5.0, 173.0):
        p = PhysicalParams(omega_a=omega_a)
        m = ReducedModel(p)
        assert m.omega0(p.k_kick) == omega_a


def test_omega0_slope_by_finite_differences():
    p = default_params()
    m = ReducedModel(p)
    k = np.array([0.5, 0.9, 1.0, 1.1] ) * p.k_kick
    h = 1.0
    numeric = (m.omega0(k + h) - m.omega0(k - h)) / (2 * h)
    expected = hbar * k / p.m
    np.testing.assert_allclose(numeric, expected, rtol=1e-8)


def test_condensate_phi0_normalisation_and_symmetry():
    p = default_params()
    grid = MomentumGrid(512, 0.0, 1.2e5)
    phi = condensate_phi0(p, grid)
    norm = integrate(GridField(grid, np.abs(phi.values) ** 2)).real
    assert norm == pytest.approx(1.0, abs=1e-10)
    from atomlaser.model import phi0_samples
    k = np.linspace(0, 5 * p.sigma_k, 17)
    np.testing.assert_array_equal(phi0_samples(p, k), phi0_samples(p, -k))


def test_condensate_phi0_rms_width():
    p = default_params()
    grid = MomentumGrid(1024, 0.0, 1.5e5)
    phi = condensate_phi0(p, grid)
    w = np.abs(phi.values) ** 2
    w /= np.sum(w)
    rms = np.sqrt(np.sum(w * grid.k ** 2))
    assert rms == pytest.approx(np.sqrt(p.m * p.omega_t / (2 * hbar)), rel=1e-6)
    assert rms == pytest.approx(1.29e4, rel=5e-3)


def test_condensate_phi0_resolution_guard():
    p = default_params()
    with pytest.raises(GridError):
        condensate_phi0(p, MomentumGrid(32, 0.0, 8.0e4))


def test_coupling_peak_and_bound():
    p = default_params()
    m = ReducedModel(p)
    grid = single_probe_grid(p)
    om = np.abs(m.Omega0(grid.k))
    assert grid.k[np.argmax(om)] == pytest.approx(p.k_kick, abs=grid.dk)
    peak_phi = (np.pi * p.m * p.omega_t / hbar) ** -0.25
    assert np.all(om <= p.Omega * peak_phi * (1 + 1e-12))


def test_optimal_omega_estimate_value_and_scalings():
    p = default_params()
    est = optimal_omega_estimate(p)
    width = np.sqrt(2 * hbar / (p.m * p.omega_t))
    assert est == pytest.approx(np.pi * hbar * p.k_kick / (4 * p.m * width), rel=1e-12)
    assert est == pytest.approx(1.2e2, rel=0.03)
    doubled = PhysicalParams(k_kick=2 * p.k_kick)
    assert optimal_omega_estimate(doubled) == pytest.approx(2 * est, rel=1e-12)
    stiffer = PhysicalParams(omega_t=4 * p.omega_t)
    assert optimal_omega_estimate(stiffer) == pytest.approx(2 * est, rel=1e-12)


def test_opo_couplings_disjoint_supports():
    p = opo_params()
    m = OpoModel(p)
    from atomlaser.prop_opo import twin_beam_grid
    grid = twin_beam_grid(p)
    om1 = m.Omega1(grid.k)
    om2 = m.Omega2(grid.k)
    overlap = abs(np.sum(np.conj(om1) * om2)) * grid.dk
    peak = float(np.max(np.abs(om1)) ** 2)
    assert overlap < 1e-12 * peak
