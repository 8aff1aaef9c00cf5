"""Two-mode Gaussian entanglement between bath bands.

Conventions: quadratures are dimensionless (vacuum covariance = identity / 2)
and the logarithmic negativity uses the natural logarithm.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, signal
from scipy.interpolate import CubicSpline

from .correlators import BandResponse, physicality_margin
from .floquet import static_green
from .model import BandPair, DomainError, Driving, SpectralModel, planck_occupation


class ContractError(ValueError):
    """Precondition of an analytic formula not met."""


class NumericalDegeneracyError(ArithmeticError):
    """Partial-transpose symplectic spectrum is numerically ill-defined."""


@dataclass(frozen=True)
class TwoModeCovariance:
    sigma: np.ndarray
    t: float = 0.0

    @property
    def alpha(self):
        return self.sigma[:2, :2]

    @property
    def beta(self):
        return self.sigma[2:, 2:]

    @property
    def gamma(self):
        return self.sigma[:2, 2:]

    @property
    def margin(self) -> float:
        return physicality_margin(self.sigma)

    @property
    def physical(self) -> bool:
        return self.margin >= -1e-10


@dataclass(frozen=True)
class EntanglementReport:
    E_N: float
    nu_tilde_minus: float = math.nan
    Gamma0: float = math.nan
    GammaN: float = math.nan
    S_ij: float = math.nan
    t_ent: float = math.nan
    E0: float = math.nan


def two_mode_covariance(model: SpectralModel, driving: Driving, pair: BandPair, t: float,
                        mode: str = "exact", response: BandResponse | None = None,
                        **kw) -> TwoModeCovariance:
    resp = response if response is not None else BandResponse(model, driving, pair, **kw)
    return TwoModeCovariance(resp.covariance(t, mode), t)


def _sigma(cov):
    return cov.sigma if isinstance(cov, TwoModeCovariance) else np.asarray(cov, dtype=float)


def nu_tilde_minus(cov, tol: float = 1e-12) -> float:
    """Smallest symplectic eigenvalue of the partially transposed covariance."""
    s = _sigma(cov)
    a, b, c = s[:2, :2], s[2:, 2:], s[:2, 2:]
    delta = np.linalg.det(a) + np.linalg.det(b) - 2 * np.linalg.det(c)
    disc = delta**2 - 4 * np.linalg.det(s)
    if disc < 0:
        if disc < -tol * max(1.0, delta**2):
            raise NumericalDegeneracyError(f"negative discriminant {disc:.3e}")
        disc = 0.0
    # the two roots multiply to det(s); divide to avoid cancellation
    big = (delta + math.sqrt(disc)) / 2
    small = np.linalg.det(s) / big
    return math.sqrt(max(small, 0.0))


def log_negativity(cov) -> EntanglementReport:
    nu = nu_tilde_minus(cov)
    en = max(0.0, -math.log(2 * nu)) if nu > 0 else math.inf
    return EntanglementReport(E_N=en, nu_tilde_minus=nu)


def two_mode_squeezed(r: float) -> np.ndarray:
    ch, sh = math.cosh(2 * r), math.sinh(2 * r)
    return 0.5 * np.array([[ch, 0, sh, 0], [0, ch, 0, -sh], [sh, 0, ch, 0], [0, -sh, 0, ch]])


# -- analytic rates ------------------------------------------------------------------

def entanglement_unit(model: SpectralModel, driving: Driving, pair: BandPair) -> float:
    """E0 = gamma0 * delta_omega * V / omega_r**3."""
    return model.gamma0 * pair.delta_omega * abs(driving.V) / driving.omega_r**3


def _check_matching(driving, pair, tol):
    eps = pair.omega_i + pair.omega_j - driving.omega_d
    if abs(eps) > tol * driving.omega_d:
        raise ContractError(f"bands miss the matching condition by {eps:.3g}; "
                            "use detuned_envelope for detuned pairs")


def _band_greens(model, driving, pair):
    gi = complex(static_green(model, driving, 1j * pair.omega_i))
    gj = complex(static_green(model, driving, 1j * pair.omega_j))
    return gi, gj


def rate_zero_T(model: SpectralModel, driving: Driving, pair: BandPair,
                tol: float = 1e-9) -> EntanglementReport:
    """Zero-temperature growth rate Gamma0 of E_N, with the unit E0.

    The drive enters through its first Fourier coefficient |V_1| (V/2 for
    V cos(w_d t)); E0 uses the cosine amplitude V.
    """
    _check_matching(driving, pair, tol)
    gi, gj = _band_greens(model, driving, pair)
    dens = math.sqrt(model.spectral_density(pair.omega_i, pair.side_i)
                     * model.spectral_density(pair.omega_j, pair.side_j))
    g0 = pair.delta_omega * abs(driving.fourier(1)) * dens * abs((gi * gj.conjugate()).real) / model.m
    return EntanglementReport(E_N=math.nan, Gamma0=g0, GammaN=g0, S_ij=0.0,
                              t_ent=0.0, E0=entanglement_unit(model, driving, pair))


def rate_finite_T(model: SpectralModel, driving: Driving, pair: BandPair,
                  tol: float = 1e-9) -> EntanglementReport:
    """Thermal offset S_ij, growth rate Gamma_N and latency t_ent."""
    base = rate_zero_T(model, driving, pair, tol)
    nui, nuj = pair.nu_i, pair.nu_j
    s_ij = 0.5 * math.log((nui**2 + nuj**2) / 2)
    gi, gj = _band_greens(model, driving, pair)
    num = nui * gi * gj.conjugate() + nuj * gi.conjugate() * gj
    den = gi * gj.conjugate() + gi.conjugate() * gj
    gn = base.Gamma0 * math.exp(-2 * s_ij) * (nui + nuj) / 2 * abs(num / den)
    t_ent = s_ij / gn if gn > 0 else math.inf
    return EntanglementReport(E_N=math.nan, Gamma0=base.Gamma0, GammaN=gn, S_ij=s_ij,
                              t_ent=t_ent, E0=base.E0)


def analytic_log_negativity(model, driving, pair, t) -> float:
    rep = rate_finite_T(model, driving, pair)
    return max(0.0, -rep.S_ij + rep.GammaN * t)


def detuned_envelope(eps, t):
    """|sinc(eps t)| t with sinc(x) = sin(x)/x; equals t at eps = 0."""
    x = np.asarray(eps, dtype=float) * np.asarray(t, dtype=float)
    return np.abs(np.sinc(x / math.pi)) * np.asarray(t, dtype=float)


# -- entanglement-breaking threshold ------------------------------------------------------

@dataclass(frozen=True)
class Threshold:
    omega: float
    side: str
    n_star: float  # bound with the configured bath split
    n_star_ohmic: float  # split-free near-Ohmic form
    T_star: float


def occupation_bound(model: SpectralModel, pair: BandPair, omega: float, side: str = "R") -> float:
    """n* = delta_omega I_side(w) / (2 m_b w**3)."""
    return pair.delta_omega * model.spectral_density(omega, side) / (2 * pair.m_i(model.m) * omega**3)


def occupation_bound_ohmic(model: SpectralModel, pair: BandPair, omega: float) -> float:
    """(2/pi)(gamma0/2w)(delta_omega/w)(m/m_b): the bound with I = 2 m gamma0 w / pi, no split."""
    return (2 / math.pi) * (model.gamma0 / (2 * omega)) * (pair.delta_omega / omega) * pair.mass_ratio


def temperature_for_occupation(omega: float, n: float, xtol: float) -> float:
    """Bisection for T with n(omega, T) = n."""
    if n <= 0:
        return 0.0
    hi = omega
    while planck_occupation(omega, hi) < n:
        hi *= 2
    return optimize.bisect(lambda T: planck_occupation(omega, T) - n, 0.0, hi, xtol=xtol)


def breaking_threshold(model: SpectralModel, pair: BandPair, omega: float | None = None,
                       side: str = "R") -> Threshold:
    """Occupation bound and entanglement-breaking temperature for one band."""
    if omega is None:
        omega = pair.omega_i if side == pair.side_i else pair.omega_j
    if omega <= 0:
        raise DomainError("omega must be positive")
    n_star = occupation_bound(model, pair, omega, side)
    T_star = temperature_for_occupation(omega, n_star, 1e-3 * model.gamma0)
    return Threshold(omega, side, n_star, occupation_bound_ohmic(model, pair, omega), T_star)


# -- cycle averages and spectra -------------------------------------------------------------

def cycle_average(times, values, omega_d: float, min_points: int = 16):
    """Sliding mean over exactly one drive period.

    Returns ``(t_out, avg)`` for the sample times at least one period after
    the first sample; ``avg[n]`` is the mean of ``values`` over
    ``[t_out[n] - T_d, t_out[n]]``.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    period = 2 * math.pi / omega_d
    if t.ndim != 1 or len(t) < 2 or np.any(np.diff(t) <= 0):
        raise ValueError("times must be increasing")
    dt = np.max(np.diff(t))
    if period / dt < min_points - 1e-9:
        raise ValueError(f"undersampled: {period / dt:.2f} points per period, need {min_points}")
    keep = t >= t[0] + period - 1e-9 * period
    if not np.any(keep):
        raise ValueError("series shorter than one drive period")
    per = period / dt
    uniform = np.ptp(np.diff(t)) <= 1e-9 * dt
    if uniform and abs(per - round(per)) < 1e-9 * per:
        # trapezoid over whole periods is exact for trigonometric polynomials
        n = int(round(per))
        cum = np.concatenate([[0.0], np.cumsum((y[1:] + y[:-1]) / 2 * dt)])
        idx = np.flatnonzero(keep)
        return t[keep], (cum[idx] - cum[idx - n]) / period
    anti = CubicSpline(t, y).antiderivative()
    tk = t[keep]
    return tk, (anti(tk) - anti(tk - period)) / period


def cycle_times(t: float, omega_d: float, points: int = 16) -> np.ndarray:
    """``points + 1`` equally spaced times covering the period that ends at t."""
    period = 2 * math.pi / omega_d
    return t - period + np.arange(points + 1) * period / points


def averaged_log_negativity(resp: BandResponse, t: float, points: int = 16,
                            mode: str = "exact") -> float:
    """E_N averaged over the drive period ending at t."""
    times = cycle_times(t, resp.driving.omega_d, points)
    covs = resp.covariances(times, mode)
    en = np.array([log_negativity(c).E_N for c in covs])
    return float(cycle_average(times, en, resp.driving.omega_d, points)[1][-1])


def find_peaks(x, y, smooth: bool = True):
    """Local maxima after 3-point smoothing; returns (positions, heights, half-max widths)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ys = np.convolve(np.pad(y, 1, mode="edge"), np.ones(3) / 3, mode="valid") if smooth else y
    idx, _ = signal.find_peaks(ys)
    if len(idx) == 0:
        return np.array([]), np.array([]), np.array([])
    widths = signal.peak_widths(ys, idx, rel_height=0.5)[0] * np.mean(np.diff(x))
    return x[idx], y[idx], widths


@dataclass(frozen=True)
class SpectrumPoint:
    omega_i: float
    omega_j: float
    E_N: float
    E_N_analytic: float
    E0: float


def spectrum_point(model: SpectralModel, driving: Driving, omega_i: float, t: float,
                   T_R: float = 0.0, T_L: float = 0.0, delta_omega: float = 1e-3,
                   mass_ratio: float = 10.0, points: int = 16, k_max: int = 4) -> SpectrumPoint:
    """Cycle-averaged exact E_N and the analytic estimate for the matched pair at omega_i."""
    pair = BandPair(omega_i, driving.omega_d - omega_i, delta_omega, mass_ratio, T_R, T_L,
                    allow_overlap=True)
    resp = BandResponse(model, driving, pair, k_max=k_max)
    en = averaged_log_negativity(resp, t, points)
    return SpectrumPoint(omega_i, pair.omega_j, en, analytic_log_negativity(model, driving, pair, t),
                         entanglement_unit(model, driving, pair))
