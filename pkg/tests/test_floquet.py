import warnings

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from drivenqbm import Driving, FloquetPoles, floquet_coefficients
from drivenqbm.floquet import (exact_coefficients, generalized_fdr_residual, recursion_coefficients,
                               static_fdr_residual, static_green)


def _mp_green(model, driving, s):
    s = mp.mpc(s)
    gt = model.gamma0 * model.cutoff / (model.cutoff + s)
    return complex(1 / (s * s + driving.omega_r**2 + s * gt))


@pytest.mark.parametrize("omega", [0.05, 1.0, 3.9, 4.0, 12.0])
def test_static_green_matches_mpmath(model, driving, omega):
    assert static_green(model, driving, 1j * omega) == pytest.approx(
        _mp_green(model, driving, 1j * omega), rel=1e-13)


def test_static_fdr_log_grid(model, driving):
    grid = np.geomspace(1e-3, 1e3, 100)
    assert max(static_fdr_residual(model, driving, w) for w in grid) < 1e-10


def test_generalized_fdr_exact(model, driving):
    grid = np.linspace(0.05, 8.0, 50)
    res = [generalized_fdr_residual(model, driving, w, k_max=6, method="exact") for w in grid]
    assert max(res) < 1e-8


def test_recursion_residual_is_cubic_in_V(model):
    w = 1.3
    vs = np.array([0.05, 0.5])
    res = [generalized_fdr_residual(model, Driving(4.0, v, 3.95), w, k_max=3,
                                    method="recursion", order=2) for v in vs]
    slope = np.diff(np.log(res))[0] / np.diff(np.log(vs))[0]
    assert slope >= 2.8


def test_recursion_approaches_exact(model, driving):
    s = 1j * np.array([0.7, 2.2])
    exact = exact_coefficients(model, driving, s, 4)
    rec, ok = recursion_coefficients(model, driving, s, 2, 4)
    assert ok
    assert np.max(np.abs(rec - exact)) < 1e-3 * np.max(np.abs(exact))


def test_poles_laplace_matches_hill_solution(model, driving):
    poles = FloquetPoles(model, driving, k_max=5)
    w = np.array([0.3, 1.7, 3.5])
    a = poles.laplace(1j * w)
    b = exact_coefficients(model, driving, 1j * w, 5)
    assert np.max(np.abs(a - b)) < 1e-10 * np.max(np.abs(b))


def test_green_function_matches_direct_ode(model, driving):
    """G(t, t') from the pole sum against an ODE solve of the (x, v, y) memory system."""
    poles = FloquetPoles(model, driving, k_max=5)
    lam, g0 = model.cutoff, model.gamma0
    tp = 0.37

    def rhs(t, u):
        x, v, y = u
        return [v, -driving.potential(t) * x - y, g0 * lam * v - lam * y]

    ts = np.linspace(tp, tp + 30.0, 61)
    sol = solve_ivp(rhs, (tp, ts[-1]), [0.0, 1.0, 0.0], t_eval=ts, rtol=1e-11, atol=1e-13,
                    method="DOP853")
    g = poles.green(ts, tp)
    assert np.max(np.abs(g - sol.y[0])) < 1e-7


def test_static_limit_poles(model):
    drv = Driving(4.0, 0.0, 3.95)
    poles = FloquetPoles(model, drv, k_max=2)
    w = np.array([0.5, 4.0])
    a = poles.laplace(1j * w)
    assert np.allclose(a[:, 2], static_green(model, drv, 1j * w), rtol=1e-12)
    assert np.allclose(np.delete(a, 2, axis=1), 0, atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.01, 9.0), st.sampled_from(["recursion", "exact"]))
def test_conjugation_symmetry(model, driving, omega, method):
    """A_{-k}(-i w) = conj(A_k(i w)), since G(t, t') is real."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sol = floquet_coefficients(driving, model, [omega, -omega], k_max=3, method=method)
    for k in sol.ks:
        c, cm = sol.coefficient(int(k)), sol.coefficient(-int(k))
        assert cm[1] == pytest.approx(np.conj(c[0]), rel=1e-9, abs=1e-15)


def test_unknown_method(model, driving):
    from drivenqbm.model import DomainError

    with pytest.raises(DomainError):
        floquet_coefficients(driving, model, 1.0, method="magic")
