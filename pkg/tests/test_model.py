import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from drivenqbm import BandPair, DomainError, SpectralModel, ValidityWarning, planck_occupation, thermal_nu


def test_spectral_density_closed_form(model):
    w = 2.0
    expect = 2 * 0.005 * w * 80.0**2 / (math.pi * (w**2 + 80.0**2))
    assert model.spectral_density(w) == pytest.approx(expect, rel=1e-15)
    assert model.spectral_density(w, "R") + model.spectral_density(w, "L") == pytest.approx(expect)


def test_gamma_tilde_is_laplace_of_kernel(model):
    import mpmath as mp

    s = 0.3 + 2.0j
    val = mp.quad(lambda t: model.gamma0 * model.cutoff * mp.exp(-model.cutoff * t) * mp.exp(-s * t),
                  [0, 1, mp.inf])
    assert complex(val) == pytest.approx(model.gamma_tilde(s), rel=1e-12)


def test_domain_errors():
    with pytest.raises(DomainError):
        SpectralModel(split_R=1.5)
    with pytest.raises(DomainError):
        SpectralModel().spectral_density(-1.0)
    with pytest.raises(DomainError):
        planck_occupation(0.0, 1.0)
    with pytest.raises(DomainError):
        BandPair(1.0, 1.0005)
    with pytest.raises(DomainError):
        BandPair(1.0, 2.0, T_R=-1.0)


def test_narrow_band_warning():
    with pytest.warns(ValidityWarning):
        BandPair(0.005, 3.9, delta_omega=1e-3)


def test_planck_zero_temperature_and_limits():
    assert planck_occupation(1.0, 0.0) == 0.0
    assert planck_occupation(1.0, 1.0) == pytest.approx(1 / (math.e - 1))
    assert thermal_nu(2.0, 1e3) == pytest.approx(2 * 1e3 / 2.0, rel=1e-3)


@given(st.floats(1e-3, 10), st.floats(1e-3, 10))
def test_planck_monotone_in_temperature(w, T):
    assert planck_occupation(w, 1.1 * T) >= planck_occupation(w, T)


def test_swap_relabels_sides():
    p = BandPair(3.0, 1.0, T_R=0.1, T_L=0.2)
    q = p.swapped()
    assert (q.omega_i, q.omega_j, q.T_R, q.T_L) == (1.0, 3.0, 0.2, 0.1)
    assert q.n_i == pytest.approx(p.n_j) and q.n_j == pytest.approx(p.n_i)


def test_driving_fourier(driving):
    assert driving.fourier(1) == driving.fourier(-1) == 0.25
    assert driving.fourier(2) == 0
    assert driving.potential(0.0) == pytest.approx(16.5)
