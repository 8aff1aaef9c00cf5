"""Static and driven Green functions of the damped parametric oscillator.

The driven Green function is expanded as
``G(t, t') = sum_k A_k(t - t') exp(i k omega_d t)``.  Its Laplace-domain
coefficients are obtained either from the perturbative recursion in the drive
amplitude or from the truncated linear system that the recursion iterates.
``FloquetPoles`` gives the same truncated solution in time domain as a sum of
damped exponentials.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .model import DomainError, Driving, SpectralModel, ValidityWarning


class PoleError(ZeroDivisionError):
    """Evaluation at (or numerically on top of) a pole of the Green function."""


class ConvergenceError(RuntimeError):
    """Perturbative Floquet series did not settle within tolerance."""


def green_inverse(model: SpectralModel, driving: Driving, s):
    s = np.asarray(s, dtype=complex)
    return s * s + driving.omega_r**2 + s * model.gamma_tilde(s)


def static_green(model: SpectralModel, driving: Driving, s):
    """g(s) = 1 / (s^2 + omega_r^2 + s gamma_tilde(s))."""
    ginv = green_inverse(model, driving, s)
    scale = abs(driving.omega_r) ** 2 + np.abs(np.asarray(s)) ** 2
    if np.any(np.abs(ginv) <= 1e-15 * scale):
        raise PoleError("static Green function evaluated at a pole")
    out = 1.0 / ginv
    return out if np.ndim(out) else complex(out)


def _drive_harmonics(driving: Driving, k_max: int) -> dict[int, complex]:
    out = {}
    for n in range(-2 * k_max, 2 * k_max + 1):
        if n != 0:
            v = driving.fourier(n)
            if v != 0:
                out[n] = v
    return out


def _shifted_green(model, driving, s, k_max):
    ks = np.arange(-k_max, k_max + 1)
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    return static_green(model, driving, s[:, None] + 1j * ks[None, :] * driving.omega_d)


def _coupling(vals, harm, k_max):
    """sum_{n != 0} V_n X_{k-n} for every k in the truncated range."""
    out = np.zeros_like(vals)
    size = 2 * k_max + 1
    for n, vn in harm.items():
        if n > 0:
            out[:, n:] += vn * vals[:, : size - n]
        else:
            out[:, : size + n] += vn * vals[:, -n:]
    return out


@dataclass(frozen=True)
class FloquetSolution:
    """Tabulated A_k(i omega) on a frequency grid.

    ``coeffs[w, k + k_max]`` holds A_k(i omega_w).  ``defect`` is the max-norm
    residual of the truncated linear system at each grid point.
    """

    k_max: int
    order: int | None
    grid: np.ndarray
    coeffs: np.ndarray
    defect: np.ndarray
    method: str
    converged: bool
    driving: Driving
    model: SpectralModel

    def coefficient(self, k: int) -> np.ndarray:
        if abs(k) > self.k_max:
            return np.zeros(len(self.grid), dtype=complex)
        return self.coeffs[:, k + self.k_max]

    @property
    def ks(self) -> np.ndarray:
        return np.arange(-self.k_max, self.k_max + 1)


def system_defect(model, driving, s, coeffs, k_max):
    """Residual of g^-1(s + i k w_d) A_k + sum_n V_n A_{k-n} - delta_k0."""
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    ks = np.arange(-k_max, k_max + 1)
    ginv = green_inverse(model, driving, s[:, None] + 1j * ks[None, :] * driving.omega_d)
    res = ginv * coeffs + _coupling(coeffs, _drive_harmonics(driving, k_max), k_max)
    res[:, k_max] -= 1.0
    return np.max(np.abs(res), axis=1)


def first_order_norm(model, driving, s, k_max):
    """||A^(1)|| / ||A^(0)||: size of the first-order Floquet correction.

    A^(0)_k = g(s) delta_k0 and A^(1)_k = -g(s + i k w_d) V_k g(s).  A single
    sideband landing on the system resonance makes this large even when the
    spectral radius of the first-order map stays small.
    """
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    g = _shifted_green(model, driving, s, k_max)
    harm = _drive_harmonics(driving, k_max)
    corr = np.zeros_like(g)
    for n, vn in harm.items():
        if abs(n) <= k_max:
            corr[:, k_max + n] = g[:, k_max + n] * vn
    return np.linalg.norm(corr, axis=1)


def recursion_coefficients(model, driving, s, order, k_max, tol=None):
    """Iterate the perturbative recursion ``order`` times at Laplace points s.

    Returns ``(coeffs, converged)``; ``converged`` is False when the last
    iteration still moved some coefficient by more than ``tol``.
    """
    if order < 0:
        raise DomainError("order must be nonnegative")
    if k_max < order:
        raise DomainError("k_max must be at least the perturbative order")
    g = _shifted_green(model, driving, s, k_max)
    harm = _drive_harmonics(driving, k_max)
    delta = np.zeros_like(g)
    delta[:, k_max] = 1.0
    cur = g * delta
    change = np.zeros(len(g))
    for _ in range(order):
        new = g * (delta - _coupling(cur, harm, k_max))
        change = np.max(np.abs(new - cur), axis=1)
        cur = new
    converged = True
    if tol is not None and order > 0:
        scale = np.max(np.abs(cur), axis=1)
        converged = bool(np.all(change <= tol * np.maximum(scale, 1e-300)))
    return cur, converged


def exact_coefficients(model, driving, s, k_max):
    """Direct solve of the (2 k_max + 1)-dimensional truncated system."""
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    ks = np.arange(-k_max, k_max + 1)
    size = len(ks)
    harm = _drive_harmonics(driving, k_max)
    off = np.zeros((size, size), dtype=complex)
    for n, vn in harm.items():
        for k in range(size):
            if 0 <= k - n < size:
                off[k, k - n] = vn
    ginv = green_inverse(model, driving, s[:, None] + 1j * ks[None, :] * driving.omega_d)
    mats = off[None, :, :] + np.einsum("wk,kl->wkl", ginv, np.eye(size))
    rhs = np.zeros((len(s), size), dtype=complex)
    rhs[:, k_max] = 1.0
    return np.linalg.solve(mats, rhs[:, :, None])[:, :, 0]


def floquet_coefficients(driving: Driving, model: SpectralModel, omega, order: int = 2,
                         k_max: int = 3, tol: float = 1e-2, method: str = "recursion",
                         strict: bool = False) -> FloquetSolution:
    """A_k(i omega) for every grid frequency, by recursion or exact solve."""
    grid = np.atleast_1d(np.asarray(omega, dtype=float))
    s = 1j * grid
    if method == "recursion":
        coeffs, converged = recursion_coefficients(model, driving, s, order, k_max, tol)
        if driving.V != 0 and order > 0:
            rho = first_order_norm(model, driving, s, k_max)
            if np.any(rho >= 1):
                warnings.warn(
                    "first-order Floquet correction exceeds the zeroth order; "
                    "drive may be too strong or too close to parametric resonance",
                    ValidityWarning,
                    stacklevel=2,
                )
        if strict and not converged:
            raise ConvergenceError("perturbative Floquet recursion did not converge")
    elif method == "exact":
        coeffs = exact_coefficients(model, driving, s, k_max)
        converged = True
        order = None
    else:
        raise DomainError(f"unknown method {method!r}")
    defect = system_defect(model, driving, s, coeffs, k_max)
    return FloquetSolution(k_max, order, grid, coeffs, defect, method, converged, driving, model)


def _shifted_coefficients(solver, driving, omega, k_max):
    """|A_k(i(omega - k w_d))|^2 for every k, each from its own solve."""
    ks = np.arange(-k_max, k_max + 1)
    shifted = omega - ks * driving.omega_d
    rows = solver(1j * shifted)
    return shifted, np.abs(rows[np.arange(len(ks)), ks + k_max]) ** 2


def generalized_fdr_terms(model, driving, omega, k_max=3, method="exact", order=2,
                          negative="zero"):
    """Both sides of Im A_0(i w) = -pi sum_k I(w - k w_d) |A_k(i(w - k w_d))|^2 / 2m.

    ``negative`` selects how I is continued to negative shifted frequencies:
    ``"zero"`` (I = 0) or ``"odd"`` (I(-w) = -I(w)).
    """
    if method == "exact":
        def solver(s):
            return exact_coefficients(model, driving, s, k_max)
    else:
        def solver(s):
            return recursion_coefficients(model, driving, s, order, k_max)[0]
    lhs = float(np.imag(solver(np.array([1j * omega]))[0, k_max]))
    shifted, mag2 = _shifted_coefficients(solver, driving, omega, k_max)
    if negative == "odd":
        dens = model.spectral_density_odd(shifted)
    elif negative == "zero":
        dens = np.where(shifted > 0, model.spectral_density_odd(shifted), 0.0)
    else:
        raise DomainError(f"unknown negative-frequency convention {negative!r}")
    rhs = float(-np.pi * np.sum(dens * mag2) / (2 * model.m))
    return lhs, rhs


def generalized_fdr_residual(model, driving, omega, k_max=3, method="exact", order=2,
                             negative="odd") -> float:
    """|LHS - RHS| / |Im A_0(i omega)| of the driven fluctuation-dissipation sum rule."""
    lhs, rhs = generalized_fdr_terms(model, driving, omega, k_max, method, order, negative)
    if lhs == 0:
        return abs(rhs)
    return abs(lhs - rhs) / abs(lhs)


def static_fdr_residual(model: SpectralModel, driving: Driving, omega) -> float:
    """Relative residual of Im g(i w) = -pi I(w) |g(i w)|^2 / 2m.

    Falls back to the absolute residual when both sides vanish to below
    1e-300 (undamped limit).
    """
    if omega <= 0:
        raise DomainError("static FDR check requires omega > 0")
    g = static_green(model, driving, 1j * omega)
    lhs = g.imag
    rhs = -np.pi * model.spectral_density(omega) * abs(g) ** 2 / (2 * model.m)
    if abs(lhs) < 1e-300:
        return abs(lhs - rhs)
    return abs(lhs - rhs) / abs(lhs)


class FloquetPoles:
    """Time-domain form of the truncated Floquet solution.

    The state (x, v, y) obeys a periodic linear ODE in which the auxiliary
    variable y carries the exponential memory of the Lorentzian kernel.  The
    Hill matrix of that ODE is diagonalized once; afterwards every Fourier
    component of the fundamental matrix is a finite sum of exponentials::

        Phi(t, t')[x, b] = sum_k exp(i k w_d t) sum_mu R[b][k, mu] exp(mu (t - t'))

    Column b = 1 (unit velocity kick) is the Green function, so
    ``A_k(tau) = sum_mu R[1][k, mu] exp(mu tau)``.
    """

    def __init__(self, model: SpectralModel, driving: Driving, k_max: int = 3):
        self.model = model
        self.driving = driving
        self.k_max = k_max
        self.ks = np.arange(-k_max, k_max + 1)
        lam = model.cutoff
        b0 = np.array([[0.0, 1.0, 0.0],
                       [-driving.omega_r**2, 0.0, -1.0],
                       [0.0, model.gamma0 * lam, -lam]], dtype=complex)
        size = 2 * k_max + 1
        hill = np.zeros((3 * size, 3 * size), dtype=complex)
        harm = _drive_harmonics(driving, k_max)
        for a, k in enumerate(self.ks):
            hill[3 * a:3 * a + 3, 3 * a:3 * a + 3] = b0 - 1j * k * driving.omega_d * np.eye(3)
            for n, vn in harm.items():
                b = a - n
                if 0 <= b < size:
                    hill[3 * a + 1, 3 * b] = -vn
        self.hill = hill
        mu, vecs = np.linalg.eig(hill)
        inv = np.linalg.inv(vecs)
        self.mu = mu
        src = 3 * k_max  # block k = 0
        rows = 3 * np.arange(size)  # x component of every block
        # residues[b][k, mu] for initial component b in (x, v, y)
        self.residues = np.stack([
            vecs[rows, :] * inv[:, src + b][None, :] for b in range(3)
        ])
        if np.max(mu.real) >= 0:
            warnings.warn("Floquet exponent with nonnegative real part: unstable dynamics",
                          ValidityWarning, stacklevel=2)

    @property
    def green_residues(self) -> np.ndarray:
        return self.residues[1]

    def homogeneous_residues(self, x0_weight=True) -> tuple[np.ndarray, np.ndarray]:
        """Residues for x_h(t) responding to x(0) and to p(0)/m.

        The x(0) response includes the initial slip of the memory variable,
        y(0) = gamma(0) x(0).
        """
        rx = self.residues[0] + self.model.gamma_at_zero * self.residues[2]
        return rx, self.residues[1]

    def A_k(self, k: int, tau) -> np.ndarray:
        tau = np.asarray(tau, dtype=float)
        if abs(k) > self.k_max:
            return np.zeros(tau.shape, dtype=complex)
        r = self.green_residues[k + self.k_max]
        out = np.exp(np.multiply.outer(tau, self.mu)) @ r
        return np.where(tau >= 0, out, 0.0)

    def laplace(self, s) -> np.ndarray:
        """A_k(s) for all k, rows indexed like ``ks``."""
        s = np.atleast_1d(np.asarray(s, dtype=complex))
        return (1.0 / (s[:, None] - self.mu[None, :])) @ self.green_residues.T

    def green(self, t, tp) -> np.ndarray:
        """G(t, t') on broadcastable arrays."""
        t = np.asarray(t, dtype=float)
        tp = np.asarray(tp, dtype=float)
        tau = t - tp
        out = np.zeros(np.broadcast(t, tp).shape, dtype=complex)
        phase = np.exp(1j * self.driving.omega_d * np.multiply.outer(t, self.ks))
        expo = np.exp(np.multiply.outer(tau, self.mu))
        out = np.einsum("...k,...m,km->...", phase, expo, self.green_residues)
        return np.where(tau >= 0, out.real, 0.0)

    def finite_transform(self, k: int, omega, t) -> np.ndarray:
        """a_k(i w) = integral_0^t A_k(t') exp(-i w t') dt'."""
        omega = np.asarray(omega, dtype=float)
        if abs(k) > self.k_max:
            return np.zeros(np.broadcast(omega, t).shape, dtype=complex)
        z = self.mu[None, :] - 1j * np.atleast_1d(omega)[:, None]
        vals = expint(z, t) @ self.green_residues[k + self.k_max]
        return vals.reshape(omega.shape) if omega.ndim else complex(vals[0])


def expint(z, t):
    """(exp(z t) - 1) / z with the z -> 0 limit t; elementwise."""
    z = np.asarray(z, dtype=complex)
    zt = z * t
    small = np.abs(zt) < 1e-8
    out = np.empty(np.broadcast(z, t).shape if np.ndim(t) else z.shape, dtype=complex)
    safe = np.where(small, 1.0, z)
    out[...] = np.expm1(zt) / safe
    out = np.where(small, t * (1 + zt / 2), out)
    return out
