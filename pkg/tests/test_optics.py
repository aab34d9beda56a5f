import numpy as np
import pytest

from atomlaser.optics import coherent, fock, squeezed
from oracles import displaced_squeezed_number_moments


def test_coherent_examples():
    s = coherent(1000.0)
    assert (s.mean_n, s.var_n) == (1000.0, 1000.0)
    assert coherent(0.0).mean_n == 0.0
    assert coherent(1.0).var_n == 1.0
    with pytest.raises(ValueError):
        coherent(-1.0)


def test_fock_examples():
    assert fock(1000).mean_n == 1000.0
    assert fock(1000).var_n == 0.0
    assert fock(0).mean_n == 0.0
    assert fock(1).var_n == 0.0
    with pytest.raises(ValueError):
        fock(-1)


def test_squeezed_reduces_to_coherent_at_r_zero():
    for a2 in (0.0, 1.0, 137.0):
        s = squeezed(a2, 0.0)
        c = coherent(a2)
        assert s.mean_n == c.mean_n
        assert s.var_n == c.var_n


def test_squeezed_paper_case_against_fock_oracle():
    mean, var = displaced_squeezed_number_moments(1000.0, 1.38)
    s = squeezed(1000.0, 1.38)
    assert s.mean_n == pytest.approx(mean, rel=1e-6)
    assert s.var_n == pytest.approx(var, rel=1e-6)
    assert s.var_n == pytest.approx(94.3, rel=1e-3)


def test_squeezed_vacuum_against_fock_oracle():
    for r in (0.4, 1.0):
        mean, var = displaced_squeezed_number_moments(0.0, r)
        s = squeezed(0.0, r)
        assert s.mean_n == pytest.approx(np.sinh(r) ** 2, rel=1e-12)
        assert s.mean_n == pytest.approx(mean, rel=1e-8)
        assert s.var_n == pytest.approx(var, rel=1e-8)


@pytest.mark.parametrize("alpha_sq", [0.0, 1.0, 10.0, 100.0, 1000.0])
@pytest.mark.parametrize("r", [0.0, 0.3, 0.7, 1.0, 1.38])
def test_squeezed_lattice_against_fock_oracle(alpha_sq, r):
    mean, var = displaced_squeezed_number_moments(alpha_sq, r)
    s = squeezed(alpha_sq, r)
    assert s.mean_n == pytest.approx(mean, rel=1e-6, abs=1e-9)
    assert s.var_n == pytest.approx(var, rel=1e-6, abs=1e-9)


def test_squeezed_variance_monotone_then_rising():
    # for large alpha_sq the number variance first drops with r, then the
    # anti-squeezing term takes over
    a2 = 1000.0
    rs = np.linspace(0.0, 3.0, 61)
    var = np.array([squeezed(a2, r).var_n for r in rs])
    imin = int(np.argmin(var))
    assert 0 < imin < len(rs) - 1
    assert np.all(np.diff(var[:imin + 1]) < 0)
    assert np.all(np.diff(var[imin:]) > 0)
