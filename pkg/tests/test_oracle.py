import math
import warnings

import numpy as np
import pytest

from drivenqbm import BandPair, DomainError, Driving
from drivenqbm.correlators import BandResponse
from drivenqbm.entanglement import log_negativity
from drivenqbm.oracle import (band_bath, band_covariance_series, build_discrete_bath,
                              extract_two_mode, initial_covariance, oracle_band_covariance,
                              propagate_covariance)


@pytest.fixture(scope="module")
def small_bath(model):
    return build_discrete_bath(model, 40, (0.5, 8.0), mass=0.1)


def test_interleaved_bath_reproduces_density(model, small_bath):
    b = small_bath
    # lam^2 / (m_l w_l spacing) recovers I_side
    dens = b.lam**2 / (b.mass * b.omega * b.spacing)
    ref = np.array([model.spectral_density(w, s) for w, s in zip(b.omega, b.side)])
    assert np.allclose(dens, ref, rtol=1e-14)
    assert set(b.side) == {"R", "L"}


def test_recurrence_guard(model):
    with pytest.raises(DomainError, match="recurrence"):
        build_discrete_bath(model, 40, (0.5, 8.0), horizon=100.0)


def test_initial_covariance_thermal(model, driving, small_bath):
    s = initial_covariance(small_bath, driving, T_R=0.3, T_L=0.0)
    occ = small_bath.occupations(0.3, 0.0)
    q = 2 + 2 * np.arange(small_bath.N)
    assert np.allclose(s[q, q] * 2 * small_bath.mass * small_bath.omega, 1 + 2 * occ)


def test_adjoint_rows_match_full_lyapunov(model, driving, small_bath):
    """The O(N) adjoint-row propagator reproduces the O(N^2) Lyapunov RK4 run."""
    bath = small_bath
    period = driving.period
    t_end = 6 * period
    traj = propagate_covariance(bath, driving, 0.2, 0.05, t_end, period / 400, record_every=400)
    full = extract_two_mode(traj, 3, 10)
    times, rows = band_covariance_series(bath, driving, t_end, 0.2, 0.05, modes=(3, 10),
                                         steps_per_period=400, record_periods=1)
    idx = [int(round(t / period)) for t in times]
    assert np.allclose(traj.times[idx], times)
    assert np.max(np.abs(full[idx] - rows)) < 1e-9


def test_band_bath_labels_hit_band_frequencies(model, driving, mid_pair):
    bath = band_bath(model, driving, mid_pair)
    assert bath.omega[bath.labels["i"]] == pytest.approx(mid_pair.omega_i, abs=1e-12)
    assert bath.omega[bath.labels["j"]] == pytest.approx(mid_pair.omega_j, abs=1e-12)
    assert bath.side[bath.labels["i"]] == "R" and bath.side[bath.labels["j"]] == "L"
    assert 0 < bath.tail_mass < 1e-3


def test_oracle_matches_analytic_short_horizon(model, driving, mid_pair):
    t_end = 60 * driving.period
    times, so = oracle_band_covariance(model, driving, mid_pair, t_end, record_periods=20)
    sa = BandResponse(model, driving, mid_pair).covariances(times)
    ex_o, ex_a = so - np.eye(4) / 2, sa - np.eye(4) / 2
    scale = np.abs(ex_o).max()
    assert np.max(np.abs(ex_o - ex_a)) < 0.02 * scale
    en_o = np.array([log_negativity(s).E_N for s in so])
    en_a = np.array([log_negativity(s).E_N for s in sa])
    assert np.allclose(en_a, en_o, rtol=0.02)
