"""Brute-force discrete-bath simulator of the driven oscillator.

The environment is a finite set of oscillators coupled linearly to x.  Two
propagators are offered:

* :func:`propagate_covariance` integrates the full Lyapunov equation
  ``dS/dt = A S + S A^T`` with fixed-step RK4.  Cost O(N^2) per step; meant
  for small baths and property checks.
* :func:`band_covariance_series` integrates only the adjoint rows of the
  observables of interest backward in time (one RK4 run per observable set),
  with the free bath rotations treated exactly by an integrating factor.
  Cost O(N) per step, which makes baths of a few thousand modes cheap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import _kernels
from .model import BandPair, DomainError, Driving, SpectralModel, planck_occupation


@dataclass
class DiscreteBath:
    omega: np.ndarray
    lam: np.ndarray
    mass: np.ndarray
    side: np.ndarray  # 'R' / 'L' per mode
    spacing: float  # per-bath grid spacing delta_omega
    m: float = 1.0
    labels: dict = field(default_factory=dict)  # named modes, e.g. {'i': 12, 'j': 40}
    tail_mass: float = 0.0  # relative system-mass shift from modes above the grid

    @property
    def m_eff(self) -> float:
        return self.m * (1 + self.tail_mass)

    @property
    def N(self) -> int:
        return len(self.omega)

    @property
    def counterterm(self) -> float:
        """gamma(0) of the discrete bath, sum lam^2 / (m_l w_l^2 m)."""
        return float(np.sum(self.lam**2 / (self.mass * self.omega**2)) / self.m)

    @property
    def t_rec(self) -> float:
        """Recurrence time 2 pi / delta_omega of each bath's grid."""
        return 2 * math.pi / self.spacing

    def occupations(self, T_R: float, T_L: float) -> np.ndarray:
        temps = np.where(self.side == "R", T_R, T_L)
        return np.array([planck_occupation(w, T) for w, T in zip(self.omega, temps)])


def _couplings(model, omega, side, spacing, mass):
    dens = np.array([model.spectral_density(w, s) for w, s in zip(omega, side)])
    return np.sqrt(mass * omega * dens * spacing)


def build_discrete_bath(model: SpectralModel, N: int, omega_range, partition: str = "interleave",
                        mass: float = 0.1, horizon: float | None = None, safety: float = 2.0):
    """Uniform grid of N modes on ``omega_range``.

    ``interleave`` alternates R/L along the grid (each bath then has spacing
    2 delta_omega and carries its own split of I); ``range`` gives the lower
    half of the range to R and the upper half to L (each mode carrying the full
    I).  ``lam^2 = m_l w_l I_side(w_l) * spacing_side``.
    """
    if N < 1:
        raise DomainError("N must be positive")
    lo, hi = omega_range
    if lo <= 0 or hi <= lo:
        raise DomainError("omega_range must be positive and increasing")
    dw = (hi - lo) / N
    omega = lo + (np.arange(N) + 0.5) * dw
    if partition == "interleave":
        side = np.where(np.arange(N) % 2 == 0, "R", "L")
        spacing = 2 * dw if N > 1 else dw
        dens_spacing = spacing
        scale = np.ones(N)
    elif partition == "range":
        side = np.where(omega < 0.5 * (lo + hi), "R", "L")
        spacing = dw
        dens_spacing = dw
        # each half carries the whole spectral density over its range
        scale = np.array([1.0 / model.split(s) if model.split(s) > 0 else 0.0 for s in side])
    else:
        raise DomainError(f"unknown partition {partition!r}")
    masses = np.full(N, mass)
    lam = _couplings(model, omega, side, dens_spacing, masses) * np.sqrt(scale)
    bath = DiscreteBath(omega, lam, masses, side, spacing, model.m)
    _check_recurrence(bath, horizon, safety)
    return bath


def _check_recurrence(bath, horizon, safety):
    if horizon is None:
        return
    if bath.t_rec < safety * horizon:
        need = 2 * math.pi / (safety * horizon)
        raise DomainError(
            f"recurrence time {bath.t_rec:.4g} below {safety} x horizon {horizon:.4g}; "
            f"grid spacing must be <= {need:.3g} (about {math.ceil(bath.spacing / need)}x more modes)")


def _band_windows(driving, pair, halfwidth, system_halfwidth):
    wd = driving.omega_d
    peaks = []
    for wb in (pair.omega_i, pair.omega_j):
        for k in (-1, 0, 1):
            for sgn in (1, -1):
                c = sgn * wb - k * wd
                if c > 0:
                    peaks.append(c)
    wins = [(max(c - halfwidth, 0.0), c + halfwidth) for c in peaks]
    wins.append((driving.omega_r - system_halfwidth, driving.omega_r + system_halfwidth))
    wins.sort()
    merged = [list(wins[0])]
    for a, b in wins[1:]:
        if a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return [tuple(w) for w in merged]


def _anchored_grid(lo, hi, anchor, spacing):
    n0 = math.ceil((lo - anchor) / spacing)
    n1 = math.floor((hi - anchor) / spacing)
    pts = anchor + np.arange(n0, n1 + 1) * spacing
    return pts[pts > 0]


def band_bath(model: SpectralModel, driving: Driving, pair: BandPair, halfwidth: float = 0.1,
              system_halfwidth: float = 0.3, coarse: float = 0.02, omega_max: float | None = None,
              mass: float | None = None, horizon: float | None = None, safety: float = 1.25,
              tail: bool = True):
    """Discrete bath resolving the frequencies that matter for one band pair.

    Each bath has a fine grid of spacing ``pair.delta_omega`` on windows around
    the sideband resonances of both bands and the system resonance.  The R grid
    passes exactly through w_i and the L grid through w_j, so the oracle modes
    labelled 'i' and 'j' are the analytic bands.  Outside the windows a coarse
    grid up to ``omega_max`` keeps the off-resonant response.  Modes above
    ``omega_max`` follow the system adiabatically; with ``tail=True`` their net
    effect, a system-mass shift ``int_{omega_max}^inf I(w) / (m w^3) dw``, is kept.
    """
    dw = pair.delta_omega
    mass = pair.m_i(model.m) if mass is None else mass
    omega_max = 4 * driving.omega_r if omega_max is None else omega_max
    wins = _band_windows(driving, pair, halfwidth, system_halfwidth)
    freqs, sides, widths = [], [], []
    for side, anchor_w in (("R", pair.omega_i), ("L", pair.omega_j)):
        for a, b in wins:
            anchor = anchor_w if a <= anchor_w <= b else a + (0.5 if side == "L" else 0.0) * dw
            pts = _anchored_grid(a, b, anchor, dw)
            freqs.append(pts)
            sides.append(np.full(len(pts), side))
            widths.append(np.full(len(pts), dw))
    # coarse fill between windows and above the last one
    edges = [0.0] + [x for w in wins for x in w] + [omega_max]
    for a, b in zip(edges[0::2], edges[1::2]):
        if b - a <= 0:
            continue
        n = max(1, int(math.ceil((b - a) / coarse)))
        h = (b - a) / n
        pts = a + (np.arange(n) + 0.5) * h
        for side in ("R", "L"):
            freqs.append(pts)
            sides.append(np.full(n, side))
            widths.append(np.full(n, h))
    omega = np.concatenate(freqs)
    side = np.concatenate(sides)
    width = np.concatenate(widths)
    masses = np.full(len(omega), mass)
    dens = np.array([model.spectral_density(w, s) for w, s in zip(omega, side)])
    lam = np.sqrt(masses * omega * dens * width)
    i = int(np.flatnonzero((side == "R") & np.isclose(omega, pair.omega_i, rtol=0, atol=1e-12))[0])
    j = int(np.flatnonzero((side == "L") & np.isclose(omega, pair.omega_j, rtol=0, atol=1e-12))[0])
    kappa = 0.0
    if tail:
        kappa = integrate.quad(lambda w: model.spectral_density(w, None) / (model.m * w**3),
                               omega_max, np.inf, limit=200)[0]
    bath = DiscreteBath(omega, lam, masses, side, dw, model.m, {"i": i, "j": j}, kappa)
    _check_recurrence(bath, horizon, safety)
    return bath


# -- full Lyapunov propagation -----------------------------------------------------

def drift_matrix(bath: DiscreteBath, driving: Driving, t: float) -> np.ndarray:
    """A(t) for the ordering (x, p, q_1, p_1, ..., q_N, p_N)."""
    n = bath.N
    a = np.zeros((2 * n + 2, 2 * n + 2))
    m = bath.m
    a[0, 1] = 1 / bath.m_eff
    a[1, 0] = -m * (driving.potential(t) + bath.counterterm)
    q = 2 + 2 * np.arange(n)
    a[1, q] = -bath.lam
    a[q, q + 1] = 1 / bath.mass
    a[q + 1, q] = -bath.mass * bath.omega**2
    a[q + 1, 0] = -bath.lam
    return a


def initial_covariance(bath: DiscreteBath, driving: Driving, T_R=0.0, T_L=0.0) -> np.ndarray:
    n = bath.N
    s = np.zeros(2 * n + 2)
    s[0] = 1 / (2 * bath.m * driving.omega_r)
    s[1] = bath.m * driving.omega_r / 2
    nu = 1 + 2 * bath.occupations(T_R, T_L)
    s[2::2] = nu / (2 * bath.mass * bath.omega)
    s[3::2] = nu * bath.mass * bath.omega / 2
    return np.diag(s)


@dataclass
class Trajectory:
    times: np.ndarray
    sigma: np.ndarray  # (n_t, 2N+2, 2N+2)
    bath: DiscreteBath


def propagate_covariance(bath: DiscreteBath, driving: Driving, T_R: float, T_L: float,
                         t_end: float, dt: float, record_every: int = 1,
                         check_dt: bool = True) -> Trajectory:
    """Fixed-step RK4 integration of dS/dt = A S + S A^T."""
    w_top = max(float(bath.omega.max()), driving.omega_r)
    if check_dt and dt > 2 * math.pi / (40 * w_top):
        raise DomainError(f"dt={dt} does not resolve omega_max={w_top}; need dt <= 2pi/(40 omega_max)")
    nsteps = int(round(t_end / dt))
    s = initial_covariance(bath, driving, T_R, T_L)
    times, out = [0.0], [s.copy()]

    def f(t, x):
        a = drift_matrix(bath, driving, t)
        ax = a @ x
        return ax + ax.T

    t = 0.0
    for k in range(nsteps):
        k1 = f(t, s)
        k2 = f(t + dt / 2, s + dt / 2 * k1)
        k3 = f(t + dt / 2, s + dt / 2 * k2)
        k4 = f(t + dt, s + dt * k3)
        s = s + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = (k + 1) * dt
        if (k + 1) % record_every == 0:
            times.append(t)
            out.append(s.copy())
    return Trajectory(np.array(times), np.array(out), bath)


def extract_two_mode(traj: Trajectory, i: int, j: int) -> np.ndarray:
    """4x4 dimensionless covariance of bath modes i, j over the trajectory."""
    b = traj.bath
    idx = [2 + 2 * i, 3 + 2 * i, 2 + 2 * j, 3 + 2 * j]
    sub = traj.sigma[:, idx][:, :, idx]
    sc = np.array([np.sqrt(b.mass[i] * b.omega[i]), 1 / np.sqrt(b.mass[i] * b.omega[i]),
                   np.sqrt(b.mass[j] * b.omega[j]), 1 / np.sqrt(b.mass[j] * b.omega[j])])
    return sub * sc[None, :, None] * sc[None, None, :]


# -- adjoint-row propagation ---------------------------------------------------------

def _rows_for_modes(bath, modes):
    """Initial adjoint rows for the dimensionless (x, p) of each listed mode."""
    nr = 2 * len(modes)
    ux = np.zeros(nr)
    up = np.zeros(nr)
    c = np.zeros((nr, bath.N), dtype=complex)
    for r, l in enumerate(modes):
        s = math.sqrt(bath.mass[l] * bath.omega[l])
        c[2 * r, l] = s  # x = q sqrt(m w)
        c[2 * r + 1, l] = 1j * s  # p / sqrt(m w): u_p = 1/sqrt(m w) -> i m w u_p
    return ux, up, c


def band_covariance_series(bath: DiscreteBath, driving: Driving, t_end: float, T_R=0.0,
                           T_L=0.0, modes=None, steps_per_period: int = 160,
                           record_periods: int = 1, t_min: float = 0.0):
    """Dimensionless covariance of ``modes`` at times t_end - n T_d.

    Returns ``(times, sigma)`` with times ascending.  ``t_end`` is rounded to
    the step grid; recorded times are spaced ``record_periods`` drive periods
    and all share the drive phase of ``t_end``.
    """
    if modes is None:
        modes = (bath.labels["i"], bath.labels["j"])
    dt = driving.period / steps_per_period
    nsteps = int(round(t_end / dt))
    T = nsteps * dt
    ux, up, c = _rows_for_modes(bath, modes)
    nu = 1 + 2 * bath.occupations(T_R, T_L)
    wts = nu / (2 * bath.mass * bath.omega)
    mod = steps_per_period * record_periods
    # spring constant m (w_r^2 + counterterm + V cos) over the effective mass
    r = bath.m / bath.m_eff
    covs, times = _kernels.propagate_rows(
        ux, up, c, bath.omega, bath.lam, bath.mass, bath.m_eff,
        r * (driving.omega_r**2 + bath.counterterm), r * driving.V, driving.omega_d, T, dt,
        nsteps, mod, nsteps % mod, wts,
        1 / (2 * bath.m * driving.omega_r), bath.m * driving.omega_r / 2)
    keep = times >= t_min - 1e-12
    return times[keep], covs[keep]


def oracle_band_covariance(model: SpectralModel, driving: Driving, pair: BandPair, t_end: float,
                           bath: DiscreteBath | None = None, **kw):
    """Oracle counterpart of the analytic band covariance for ``pair``."""
    bath_kw = {k: kw.pop(k) for k in list(kw) if k in
               ("halfwidth", "system_halfwidth", "coarse", "omega_max", "horizon", "safety", "tail")}
    if bath is None:
        bath = band_bath(model, driving, pair, **bath_kw)
    return band_covariance_series(bath, driving, t_end, pair.T_R, pair.T_L, **kw)
