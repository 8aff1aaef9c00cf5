"""Finite-time correlators of two environmental bands.

Every band observable is linear in the initial operators, so its symmetrized
covariance is a sum over sources: the two band modes themselves, the
continuum of remaining bath modes (a frequency integral weighted by
``I_alpha(w) (2 n_alpha(w) + 1) / 2``) and the initial state of the system.
All time integrals are done in closed form from the pole representation of
the driven Green function; only the frequency integral is numerical.

Covariances are returned in dimensionless quadratures
``x = q sqrt(m_b w_b)``, ``p = p / sqrt(m_b w_b)`` ordered (x_i, p_i, x_j, p_j),
with the vacuum normalized to identity / 2.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .floquet import FloquetPoles, FloquetSolution, expint, floquet_coefficients
from .model import BandPair, Driving, SpectralModel, ValidityWarning, planck_occupation

SYMPLECTIC = np.array([[0.0, 1.0], [-1.0, 0.0]])
OMEGA4 = np.kron(np.eye(2), SYMPLECTIC)


def physicality_margin(sigma: np.ndarray) -> float:
    """Smallest eigenvalue of sigma + i Omega / 2 (nonnegative when physical)."""
    n = sigma.shape[0] // 2
    omega = np.kron(np.eye(n), SYMPLECTIC)
    return float(np.min(np.linalg.eigvalsh(sigma + 0.5j * omega)))


# -- finite-time transforms ---------------------------------------------------

def a_k_finite(poles: FloquetPoles, k: int, omega, t):
    """a_k(i w) = integral_0^t A_k(t') exp(-i w t') dt'."""
    if t == 0:
        return np.zeros(np.shape(omega), dtype=complex) if np.ndim(omega) else 0j
    return poles.finite_transform(k, omega, t)


@dataclass(frozen=True)
class JFunctionValue:
    omega: float
    omega_i: float
    t: float
    value: complex
    resonant: np.ndarray  # per-k  t sinc(.) a_k e^{i...}
    finite: np.ndarray  # per-k F_k


def _finite_part(poles, k, omega, omega_i, t):
    """F_k = (a_k(i w) - a_k(i(w_i - k w_d))) / (i (w - w_i + k w_d)), with its limit."""
    wd = poles.driving.omega_d
    shift = omega - omega_i + k * wd
    w0 = omega_i - k * wd
    if abs(shift) * max(t, 1.0) > 1e-7:
        return (a_k_finite(poles, k, omega, t) - a_k_finite(poles, k, w0, t)) / (1j * shift)
    # derivative limit: d a_k / d(i w) = -integral t' A_k(t') e^{-i w t'} dt'
    r = poles.green_residues[k + poles.k_max]
    z = poles.mu - 1j * omega
    zt = z * t
    # integral_0^t t' e^{z t'} dt' = (e^{zt}(zt - 1) + 1) / z^2
    small = np.abs(zt) < 1e-6
    safe = np.where(small, 1.0, z)
    moment = np.where(small, t * t / 2, (np.exp(zt) * (zt - 1) + 1) / safe**2)
    return complex(-np.sum(r * moment))


def j_function(poles: FloquetPoles, omega: float, omega_i: float, t: float) -> JFunctionValue:
    """J(w, w_i, t) = sum_k int_0^t dt' e^{i(w - w_i + k w_d)t'} int_0^t' A_k(t'') e^{-i w t''}."""
    wd = poles.driving.omega_d
    res = np.zeros(len(poles.ks), dtype=complex)
    fin = np.zeros(len(poles.ks), dtype=complex)
    if t > 0:
        for idx, k in enumerate(poles.ks):
            shift = omega - omega_i + k * wd
            half = shift * t / 2
            sinc = math.sin(half) / half if half != 0 else 1.0
            res[idx] = t * sinc * a_k_finite(poles, k, omega, t) * np.exp(1j * half)
            fin[idx] = _finite_part(poles, k, omega, omega_i, t)
    return JFunctionValue(omega, omega_i, t, complex(res.sum() + fin.sum()), res, fin)


def j_function_grid(poles: FloquetPoles, inv, bk, omega, omega_b, t, longtime=False):
    """Vectorized J(w, w_b, t) on a frequency grid.

    ``inv[w, mu] = 1 / (mu - i w)`` and ``bk[w, k] = sum_mu R[k, mu] inv[w, mu]``
    are precomputed once per grid.
    """
    wd = poles.driving.omega_d
    r = poles.green_residues
    z1 = poles.mu[None, :] + 1j * (poles.ks[:, None] * wd - omega_b)
    if longtime:
        e1 = -1.0 / z1
    else:
        e1 = expint(z1, t)
    coef = np.sum(r * e1, axis=0)
    term1 = inv @ coef
    shift = omega[:, None] - omega_b + poles.ks[None, :] * wd
    term2 = np.sum(bk * expint(1j * shift, t), axis=1)
    return term1 - term2


# -- quadrature grid ------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureSpec:
    nodes: int = 8
    peak_panel: float = 1.0  # panel width near peaks, in units of pi / t
    far_panel: float = 4.0  # elsewhere, in units of pi / t
    peak_halfwidth: int = 8  # peak region half width, in units of pi / t
    omega_max: float | None = None
    omega_min: float = 0.0


def frequency_grid(poles: FloquetPoles, band_freqs, t, spec: QuadratureSpec = QuadratureSpec()):
    """Composite Gauss-Legendre nodes and weights on [omega_min, omega_max].

    Breakpoints sit on the sinc peaks w = +-w_b - k w_d, at multiples of pi/t
    around them, and around the damped system resonances.
    """
    wd = poles.driving.omega_d
    h = math.pi / t
    centers = []
    for wb in band_freqs:
        for k in poles.ks:
            for sgn in (1, -1):
                c = sgn * wb - k * wd
                if c > 0:
                    centers.append(c)
    centers = np.array(sorted(set(np.round(centers, 14))))
    omega_max = spec.omega_max
    if omega_max is None:
        omega_max = float(centers.max() + 2 * poles.driving.omega_r)
    brk = [spec.omega_min, omega_max]
    offs = np.arange(-spec.peak_halfwidth, spec.peak_halfwidth + 1)
    for c in centers:
        brk.extend(c + offs * h * spec.peak_panel)
    slow = poles.mu[(poles.mu.real < 0) & (np.abs(poles.mu.real) < poles.driving.omega_r)]
    for m in slow:
        c = abs(m.imag)
        wid = abs(m.real)
        for f in (0.0, 0.5, 1, 2, 4, 8, 16):
            brk.extend([c - f * wid, c + f * wid])
    brk = np.array(sorted(b for b in brk if spec.omega_min <= b <= omega_max))
    brk = np.unique(brk)
    # near-peak regions get the fine panel width
    peak_lo = centers - spec.peak_halfwidth * h * spec.peak_panel
    peak_hi = centers + spec.peak_halfwidth * h * spec.peak_panel
    edges = [brk[0]]
    for a, b in zip(brk[:-1], brk[1:]):
        mid = 0.5 * (a + b)
        near = np.any((mid >= peak_lo) & (mid <= peak_hi))
        width = h * (spec.peak_panel if near else spec.far_panel)
        n = max(1, int(math.ceil((b - a) / width - 1e-9)))
        edges.extend(np.linspace(a, b, n + 1)[1:])
    edges = np.asarray(edges)
    x, w = np.polynomial.legendre.leggauss(spec.nodes)
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    nodes = (0.5 * (hi + lo))[:, None] + half[:, None] * x[None, :]
    weights = half[:, None] * w[None, :]
    return nodes.ravel(), weights.ravel()


# -- band covariance ----------------------------------------------------------

@dataclass(frozen=True)
class BandCorrelators:
    """Symmetrized equal-time correlators of a band pair at time t.

    ``sigma`` is the dimensionless 4x4 covariance; the named properties give
    physical-unit correlators.
    """

    pair: BandPair
    t: float
    sigma: np.ndarray
    mode: str
    m: float = 1.0
    physical: bool = True
    margin: float = 0.0

    def _scale(self, b):
        mb = self.pair.m_i(self.m)
        return math.sqrt(mb * (self.pair.omega_i if b == 0 else self.pair.omega_j))

    @property
    def qq_ii(self):
        return self.sigma[0, 0] / self._scale(0) ** 2

    @property
    def qq_jj(self):
        return self.sigma[2, 2] / self._scale(1) ** 2

    @property
    def qq_ij(self):
        return self.sigma[0, 2] / (self._scale(0) * self._scale(1))

    @property
    def pp_ii(self):
        return self.sigma[1, 1] * self._scale(0) ** 2

    @property
    def pp_jj(self):
        return self.sigma[3, 3] * self._scale(1) ** 2

    @property
    def pp_ij(self):
        return self.sigma[1, 3] * self._scale(0) * self._scale(1)

    @property
    def qp_ii(self):
        return self.sigma[0, 1]

    @property
    def qp_jj(self):
        return self.sigma[2, 3]

    @property
    def qp_ij(self):
        return self.sigma[0, 3] * self._scale(1) / self._scale(0)

    @property
    def qp_ji(self):
        return self.sigma[2, 1] * self._scale(0) / self._scale(1)

    def energy(self, band: int = 0) -> float:
        w = self.pair.omega_i if band == 0 else self.pair.omega_j
        o = 2 * band
        return w * (self.sigma[o, o] + self.sigma[o + 1, o + 1]) / 2


class BandResponse:
    """Exact continuum-bath covariance of a band pair, reusable across times."""

    def __init__(self, model: SpectralModel, driving: Driving, pair: BandPair,
                 k_max: int = 4, poles: FloquetPoles | None = None,
                 quad: QuadratureSpec = QuadratureSpec()):
        self.model = model
        self.driving = driving
        self.pair = pair
        self.poles = poles if poles is not None else FloquetPoles(model, driving, k_max)
        self.quad = quad
        self._grid_t = None

    # band b: 0 -> i (side_i), 1 -> j (side_j)
    def _band(self, b):
        p = self.pair
        if b == 0:
            return p.omega_i, p.side_i, p.n_i
        return p.omega_j, p.side_j, p.n_j

    def _coupling(self, b):
        w, side, _ = self._band(b)
        return math.sqrt(self.model.spectral_density(w, side) * self.pair.delta_omega)

    def _prepare(self, t_max):
        if self._grid_t is not None and self._grid_t >= t_max:
            return
        nodes, weights = frequency_grid(
            self.poles, (self.pair.omega_i, self.pair.omega_j), t_max, self.quad)
        keep = nodes > 0
        self.nodes, self.weights = nodes[keep], weights[keep]
        self.inv = 1.0 / (self.poles.mu[None, :] - 1j * self.nodes[:, None])
        self.bk = self.inv @ self.poles.green_residues.T
        dens = np.zeros_like(self.nodes)
        for side in ("R", "L"):
            temp = self.pair.temperature(side)
            nu = 1.0 + 2.0 * planck_occupation(self.nodes, temp)
            dens += self.model.spectral_density(self.nodes, side) * nu
        self.noise = self.weights * dens / 2
        self._grid_t = t_max

    def _s_pm(self, omega, wb, t, longtime, inv=None, bk=None):
        """S_+-(w) = int_0^t e^{+-i w_b (t - tau)} Y(tau; w) dtau."""
        inv = self.inv if inv is None else inv
        bk = self.bk if bk is None else bk
        jm = j_function_grid(self.poles, inv, bk, omega, -wb, t, longtime)
        jp = j_function_grid(self.poles, inv, bk, omega, wb, t, longtime)
        sp = np.exp(1j * wb * t) * np.conj(jm)
        sm = np.exp(-1j * wb * t) * np.conj(jp)
        return sp, sm

    def responses(self, omega, t, longtime=False, inv=None, bk=None):
        """Dimensionless response amplitudes W[w, obs] for obs (x_i, p_i, x_j, p_j)."""
        out = np.empty((len(omega), 4), dtype=complex)
        for b in (0, 1):
            wb = self._band(b)[0]
            c = self._coupling(b) / self.model.m
            sp, sm = self._s_pm(omega, wb, t, longtime, inv, bk)
            out[:, 2 * b] = c * (sp - sm) / 2j
            out[:, 2 * b + 1] = c * (sp + sm) / 2
        return out

    def _point_responses(self, omega, t, longtime):
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        inv = 1.0 / (self.poles.mu[None, :] - 1j * omega[:, None])
        bk = inv @ self.poles.green_residues.T
        return self.responses(omega, t, longtime, inv, bk)

    def _system_term(self, t):
        """Covariance contribution of the initial system ground state."""
        rx, rv = self.poles.homogeneous_residues()
        wd = self.driving.omega_d
        omega_r = self.driving.omega_r
        m = self.model.m
        amps = np.zeros((2, 4))
        for b in (0, 1):
            wb = self._band(b)[0]
            c = self._coupling(b)
            for col, res in enumerate((rx, rv)):
                z_p = self.poles.mu[None, :] + 1j * (self.poles.ks[:, None] * wd - wb)
                z_m = self.poles.mu[None, :] + 1j * (self.poles.ks[:, None] * wd + wb)
                hp = np.exp(1j * wb * t) * np.sum(res * expint(z_p, t))
                hm = np.exp(-1j * wb * t) * np.sum(res * expint(z_m, t))
                amps[col, 2 * b] = (-c * (hp - hm) / 2j).real
                amps[col, 2 * b + 1] = (-c * (hp + hm) / 2).real
        amps[1] /= m  # column v is p(0)/m
        var = np.array([1 / (2 * m * omega_r), m * omega_r / 2])
        return np.einsum("c,ca,cb->ab", var, amps, amps)

    def _direct_term(self, t, longtime):
        cov = np.zeros((4, 4))
        for b in (0, 1):
            wb, _, nb = self._band(b)
            nu = 1 + 2 * nb
            c = self._coupling(b)
            direct = np.zeros(4, dtype=complex)
            direct[2 * b] = np.exp(-1j * wb * t)
            direct[2 * b + 1] = -1j * np.exp(-1j * wb * t)
            resp = c * self._point_responses(wb, t, longtime)[0]
            cross = np.real(np.outer(direct, np.conj(resp)))
            cov += nu / 2 * (np.real(np.outer(direct, np.conj(direct))) + cross + cross.T)
        return cov

    def covariances(self, times, mode: str = "exact") -> np.ndarray:
        """Covariance at each of ``times`` (shape (n, 4, 4)); one pass over the grid."""
        if mode not in ("exact", "longtime"):
            raise ValueError(f"unknown mode {mode!r}")
        longtime = mode == "longtime"
        times = np.atleast_1d(np.asarray(times, dtype=float))
        if np.any(times < 0):
            raise ValueError("times must be nonnegative")
        out = np.empty((len(times), 4, 4))
        zero = times == 0
        out[zero] = np.diag([self.pair.nu_i, self.pair.nu_i, self.pair.nu_j, self.pair.nu_j]) / 2
        pos = np.flatnonzero(~zero)
        if len(pos):
            self._prepare(times[pos].max())
            cont = _kernels.continuum_covariance(self, times[pos], longtime)
            for n, idx in enumerate(pos):
                t = times[idx]
                cov = self._direct_term(t, longtime) + cont[n]
                if not longtime:
                    cov = cov + self._system_term(t)
                out[idx] = 0.5 * (cov + cov.T)
        return out

    def covariance(self, t: float, mode: str = "exact") -> np.ndarray:
        return self.covariances([t], mode)[0]

    def correlators(self, t: float, mode: str = "exact") -> BandCorrelators:
        if mode == "longtime" and t < 5 / max(self.model.gamma0, 1e-300):
            warnings.warn("longtime mode used before t = 5/gamma0", ValidityWarning, stacklevel=2)
        sigma = self.covariance(t, mode)
        margin = physicality_margin(sigma)
        return BandCorrelators(self.pair, t, sigma, mode, self.model.m,
                               physical=margin >= -1e-10, margin=margin)


def position_correlator(model, driving, pair, t, mode="exact", **kw) -> BandCorrelators:
    """Band correlators at time t; qq_* entries carry the position correlators."""
    return BandResponse(model, driving, pair, **kw).correlators(t, mode)


def momentum_and_cross_correlators(model, driving, pair, t, mode="exact", **kw) -> BandCorrelators:
    """Same computation as :func:`position_correlator`; read pp_* and qp_* entries."""
    return BandResponse(model, driving, pair, **kw).correlators(t, mode)


# -- energy and heat -------------------------------------------------------------

@dataclass(frozen=True)
class HeatRate:
    total: float
    resonant: float  # Theta(w_{i,k}) > 0 sector
    pair_creation: float  # Theta(-w_{i,k}) sector


def heat_rate(model: SpectralModel, driving: Driving, pair: BandPair, band: int = 0,
              solution: FloquetSolution | None = None, k_max: int = 3, order: int = 2,
              method: str = "recursion") -> HeatRate:
    """Long-time heating rate of band i (band=0) or j (band=1)."""
    if band == 0:
        wi, side, temp_side = pair.omega_i, pair.side_i, pair.temperature(pair.side_i)
    else:
        wi, side, temp_side = pair.omega_j, pair.side_j, pair.temperature(pair.side_j)
    ks = np.arange(-k_max, k_max + 1)
    n_own = planck_occupation(wi, temp_side)
    res = pair_ = 0.0
    for k in ks:
        wik = wi - k * driving.omega_d
        if wik == 0:
            continue
        if solution is not None and abs(k) <= solution.k_max and np.any(np.isclose(solution.grid, wik)):
            idx = int(np.argmin(np.abs(solution.grid - wik)))
            ak = solution.coefficient(k)[idx]
        else:
            sol = floquet_coefficients(driving, model, wik, order=order, k_max=k_max,
                                       method=method, tol=None)
            ak = sol.coefficient(k)[0]
        for other in ("R", "L"):
            prob = (math.pi * model.spectral_density(wi, side)
                    * model.spectral_density(abs(wik), other) * abs(ak) ** 2 / (2 * model.m**2))
            n_other = planck_occupation(abs(wik), pair.temperature(other))
            if wik > 0:
                res += wi * prob * (n_other - n_own)
            else:
                pair_ += wi * prob * (n_other + n_own + 1)
    dw = pair.delta_omega
    return HeatRate(dw * (res + pair_), dw * res, dw * pair_)


def heat_rate_closed_form(model, driving, pair, total_density: bool = True) -> float:
    """Leading-order zero-temperature pair-creation rate of band i.

    ``pi w_i dw |V_1|^2 I_R(w_i) I(w_j) |g_i g_j*|^2 / 2 m^2`` with
    w_j = w_d - w_i and V_1 = V/2 the first Fourier coefficient of the drive;
    ``total_density=False`` uses I_L(w_j) instead of I(w_j).  Only the
    one-quantum sector is kept, so sectors enhanced by a system resonance
    (e.g. w_i + w_r = 2 w_d) are missing.
    """
    from .floquet import static_green

    wi = pair.omega_i
    wj = driving.omega_d - wi
    gi = static_green(model, driving, 1j * wi)
    gj = static_green(model, driving, 1j * wj)
    dens_j = model.spectral_density(abs(wj), None if total_density else "L")
    return (math.pi * wi * pair.delta_omega * abs(driving.fourier(1))**2
            * model.spectral_density(wi, pair.side_i)
            * dens_j * abs(gi * np.conj(gj)) ** 2 / (2 * model.m**2))


def band_energy(model, driving, pair, t, band: int = 0, mode: str = "exact",
                response: BandResponse | None = None, **kw):
    """Energy of band i (band=0) or j (band=1) at the times ``t``.

    ``exact`` evaluates the full covariance; ``longtime`` returns the affine
    asymptote [1/2 + n] w + Qdot t.
    """
    times = np.atleast_1d(np.asarray(t, dtype=float))
    w = pair.omega_i if band == 0 else pair.omega_j
    n = pair.n_i if band == 0 else pair.n_j
    if mode == "longtime":
        q = heat_rate(model, driving, pair, band).total
        out = (0.5 + n) * w + q * times
    else:
        resp = response if response is not None else BandResponse(model, driving, pair, **kw)
        out = np.array([resp.correlators(tt, "exact").energy(band) for tt in times])
    return out if np.ndim(t) else float(out[0])
