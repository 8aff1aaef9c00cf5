import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from drivenqbm import BandPair, Driving, FloquetPoles, _kernels
from drivenqbm.correlators import (BandResponse, band_energy, heat_rate, heat_rate_closed_form,
                                   j_function, j_function_grid, physicality_margin)


@pytest.fixture(scope="module")
def poles(model, driving):
    return FloquetPoles(model, driving, k_max=3)


def _j_by_quadrature(poles, omega, omega_i, t):
    """Direct double time integral defining J, by nested adaptive quadrature."""
    wd = poles.driving.omega_d
    total = 0j
    for k in poles.ks:
        def inner(t1, k=k):
            f = lambda t2: poles.A_k(int(k), t2) * np.exp(-1j * omega * t2)
            re = integrate.quad(lambda x: f(x).real, 0, t1, limit=200, epsabs=1e-13)[0]
            im = integrate.quad(lambda x: f(x).imag, 0, t1, limit=200, epsabs=1e-13)[0]
            return (re + 1j * im) * np.exp(1j * (omega - omega_i + k * wd) * t1)
        re = integrate.quad(lambda x: inner(x).real, 0, t, limit=200, epsabs=1e-12)[0]
        im = integrate.quad(lambda x: inner(x).imag, 0, t, limit=200, epsabs=1e-12)[0]
        total += re + 1j * im
    return total


@pytest.mark.parametrize("omega,omega_i", [(1.3, 2.65), (3.9, 3.9), (0.6, 3.35)])
def test_j_function_against_double_quadrature(poles, omega, omega_i):
    t = 6.0
    ref = _j_by_quadrature(poles, omega, omega_i, t)
    val = j_function(poles, omega, omega_i, t).value
    assert abs(val - ref) < 1e-8 * max(1.0, abs(ref))


def test_j_grid_matches_pointwise(poles):
    omega = np.array([0.4, 1.3, 3.95 - 1.3])
    inv = 1.0 / (poles.mu[None, :] - 1j * omega[:, None])
    bk = inv @ poles.green_residues.T
    grid = j_function_grid(poles, inv, bk, omega, 1.3, 50.0)
    for w, g in zip(omega, grid):
        assert g == pytest.approx(j_function(poles, w, 1.3, 50.0).value, rel=1e-10, abs=1e-14)


def test_initial_covariance_is_thermal(model, driving):
    p = BandPair(2.0, 1.95, T_R=0.5, T_L=1.0)
    cov = BandResponse(model, driving, p).covariance(0.0)
    assert np.allclose(cov, np.diag([p.nu_i, p.nu_i, p.nu_j, p.nu_j]) / 2)


def test_batched_times_match_single_times(model, driving, mid_pair):
    resp = BandResponse(model, driving, mid_pair, k_max=3)
    times = np.array([100.0, 150.0, 200.0])
    batch = resp.covariances(times)
    for t, c in zip(times, batch):
        single = BandResponse(model, driving, mid_pair, k_max=3)
        single._prepare(times.max())
        assert np.allclose(single.covariance(t), c, rtol=1e-10, atol=1e-14)


def test_numba_and_numpy_paths_agree(model, driving, mid_pair, monkeypatch):
    times = np.array([80.0, 120.0])
    a = BandResponse(model, driving, mid_pair, k_max=3).covariances(times)
    monkeypatch.setenv("DRIVENQBM_NUMBA", "0")
    b = BandResponse(model, driving, mid_pair, k_max=3).covariances(times)
    assert np.max(np.abs(a - b)) < 1e-13


def test_zero_temperature_static_bath_stays_in_vacuum(model):
    """A static system coupled to a vacuum bath leaves each band near the vacuum."""
    drv = Driving(4.0, 0.0, 3.95)
    cov = BandResponse(model, drv, BandPair(2.0, 1.0), k_max=2).covariance(400.0)
    assert np.allclose(np.diag(cov), 0.5, atol=1e-4)


@settings(max_examples=6, deadline=None)
@given(st.floats(0.3, 3.6), st.floats(10.0, 600.0), st.floats(0.0, 0.2))
def test_covariance_symmetric_and_physical(model, driving, wi, t, temp):
    p = BandPair(wi, driving.omega_d - wi + 0.002, T_R=temp, T_L=temp / 2, allow_overlap=True)
    cov = BandResponse(model, driving, p, k_max=3).covariance(t)
    assert np.allclose(cov, cov.T)
    assert physicality_margin(cov) > -1e-10


def test_swap_invariance(model, driving):
    """Relabelling i <-> j together with R <-> L permutes the covariance (equal split)."""
    p = BandPair(2.3, 1.65, T_R=0.05, T_L=0.1)
    a = BandResponse(model, driving, p, k_max=3).covariance(250.0)
    b = BandResponse(model, driving, p.swapped(), k_max=3).covariance(250.0)
    perm = [2, 3, 0, 1]
    assert np.allclose(a, b[np.ix_(perm, perm)], rtol=1e-9, atol=1e-14)


def test_band_energy_starts_at_thermal_value(model, driving):
    p = BandPair(2.0, 1.95, T_R=0.3)
    e = band_energy(model, driving, p, [0.0])
    assert e[0] == pytest.approx((0.5 + p.n_i) * p.omega_i)


def test_heat_rate_closed_form_mid_band(model, driving):
    """Away from system sideband resonances one quantum dominates and the closed form holds to O(V)."""
    p = BandPair(2.3, 1.65)
    q = heat_rate(model, driving, p).total
    assert heat_rate_closed_form(model, driving, p) == pytest.approx(q, rel=0.15)


def test_heat_rate_vanishes_without_drive(model):
    p = BandPair(2.0, 1.95)
    assert heat_rate(model, Driving(4.0, 0.0, 3.95), p).total == pytest.approx(0.0, abs=1e-30)


def test_heat_rate_thermal_flow_sign(model):
    """Undriven, a hot L bath heats a cold R band."""
    drv = Driving(4.0, 0.0, 3.95)
    p = BandPair(3.9, 0.05, T_R=0.0, T_L=0.5, allow_overlap=True)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert heat_rate(model, drv, p).total > 0
