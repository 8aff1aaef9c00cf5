"""Physical model: Ohmic-Lorentzian bath, harmonic driving, band pairs.

Units: hbar = k_B = 1, the system mass is the mass unit (m = 1 by default),
and every frequency, temperature and rate shares one frequency unit.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np


class DomainError(ValueError):
    """Argument outside the domain of a physical function."""


class ValidityWarning(UserWarning):
    """Parameters outside the regime where an approximation is trusted."""


@dataclass(frozen=True)
class SpectralModel:
    """Ohmic spectral density with Lorentzian cutoff, split between two baths.

    ``I(w) = 2 m gamma0 w cutoff**2 / (pi (w**2 + cutoff**2))`` and
    ``I_R = split_R * I``, ``I_L = (1 - split_R) * I``.
    """

    gamma0: float = 0.005
    cutoff: float = 80.0
    m: float = 1.0
    split_R: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.split_R <= 1.0:
            raise DomainError(f"split_R must lie in [0, 1], got {self.split_R}")
        if self.cutoff <= 0 or self.gamma0 < 0 or self.m <= 0:
            raise DomainError("cutoff and m must be positive, gamma0 nonnegative")

    @property
    def split_L(self) -> float:
        return 1.0 - self.split_R

    def split(self, side: str) -> float:
        if side == "R":
            return self.split_R
        if side == "L":
            return self.split_L
        raise DomainError(f"unknown bath side {side!r}")

    def spectral_density(self, omega, side: str | None = None):
        """I(w), or I_side(w) when ``side`` is 'R' or 'L'."""
        w = np.asarray(omega, dtype=float)
        if np.any(w < 0):
            raise DomainError("spectral density requires omega >= 0")
        lam2 = self.cutoff**2
        val = 2 * self.m * self.gamma0 * w * lam2 / (math.pi * (w**2 + lam2))
        if side is not None:
            val = self.split(side) * val
        return val if val.ndim else float(val)

    def spectral_density_odd(self, omega):
        """Odd extension I(-w) = -I(w), valid for any real w."""
        w = np.asarray(omega, dtype=float)
        lam2 = self.cutoff**2
        val = 2 * self.m * self.gamma0 * w * lam2 / (math.pi * (w**2 + lam2))
        return val if val.ndim else float(val)

    def gamma_tilde(self, s):
        """Laplace transform of the dissipation kernel, gamma0 L / (L + s)."""
        s = np.asarray(s, dtype=complex)
        if np.any(np.abs(s + self.cutoff) < 1e-14 * self.cutoff):
            raise DomainError("gamma_tilde has a pole at s = -cutoff")
        val = self.gamma0 * self.cutoff / (self.cutoff + s)
        return val if val.ndim else complex(val)

    def kernel(self, tau):
        """gamma(tau) = gamma0 * cutoff * exp(-cutoff |tau|)."""
        tau = np.abs(np.asarray(tau, dtype=float))
        return self.gamma0 * self.cutoff * np.exp(-self.cutoff * tau)

    @property
    def gamma_at_zero(self) -> float:
        return self.gamma0 * self.cutoff


# Short aliases used throughout the package.
def spectral_density(model: SpectralModel, omega, side: str | None = None):
    return model.spectral_density(omega, side)


def dissipation_kernel_laplace(model: SpectralModel, s):
    return model.gamma_tilde(s)


@dataclass(frozen=True)
class Driving:
    """Renormalized potential V_R(t) = omega_r**2 + V cos(omega_d t)."""

    omega_r: float = 4.0
    V: float = 0.5
    omega_d: float = 3.95

    def fourier(self, k: int) -> complex:
        if k == 0:
            return complex(self.omega_r**2)
        if abs(k) == 1:
            return complex(self.V / 2)
        return 0j

    def potential(self, t):
        return self.omega_r**2 + self.V * np.cos(self.omega_d * np.asarray(t, dtype=float))

    @property
    def period(self) -> float:
        return 2 * math.pi / self.omega_d


def planck_occupation(omega, T):
    """Bose-Einstein occupation 1/(exp(w/T) - 1); exactly zero at T = 0."""
    w = np.asarray(omega, dtype=float)
    if np.any(w <= 0):
        raise DomainError("planck_occupation requires omega > 0")
    if T < 0:
        raise DomainError("temperature must be nonnegative")
    if T == 0:
        out = np.zeros_like(w)
    else:
        with np.errstate(over="ignore"):
            out = 1.0 / np.expm1(w / T)
    return out if out.ndim else float(out)


def thermal_nu(omega, T):
    """nu = 1 + 2 n(omega, T), the thermal symplectic eigenvalue times two."""
    return 1.0 + 2.0 * planck_occupation(omega, T)


@dataclass(frozen=True)
class BandPair:
    """Two narrow bath bands, i in the R bath and j in the L bath."""

    omega_i: float
    omega_j: float
    delta_omega: float = 1e-3
    mass_ratio: float = 10.0  # m / m_i
    T_R: float = 0.0
    T_L: float = 0.0
    narrow_ratio: float = 0.1
    allow_overlap: bool = False
    side_i: str = field(default="R")
    side_j: str = field(default="L")

    def __post_init__(self):
        if self.omega_i <= 0 or self.omega_j <= 0:
            raise DomainError("band frequencies must be positive")
        if self.delta_omega <= 0:
            raise DomainError("delta_omega must be positive")
        if self.T_R < 0 or self.T_L < 0:
            raise DomainError("temperatures must be nonnegative")
        if not self.allow_overlap and abs(self.omega_i - self.omega_j) <= self.delta_omega:
            raise DomainError("bands overlap; pass allow_overlap=True to override")
        if self.delta_omega >= self.narrow_ratio * min(self.omega_i, self.omega_j):
            warnings.warn(
                "delta_omega is not small compared with the band frequencies",
                ValidityWarning,
                stacklevel=3,
            )

    def m_i(self, m: float = 1.0) -> float:
        return m / self.mass_ratio

    def temperature(self, side: str) -> float:
        return self.T_R if side == "R" else self.T_L

    @property
    def n_i(self) -> float:
        return planck_occupation(self.omega_i, self.temperature(self.side_i))

    @property
    def n_j(self) -> float:
        return planck_occupation(self.omega_j, self.temperature(self.side_j))

    @property
    def nu_i(self) -> float:
        return 1.0 + 2.0 * self.n_i

    @property
    def nu_j(self) -> float:
        return 1.0 + 2.0 * self.n_j

    def swapped(self) -> "BandPair":
        """Relabel i <-> j together with R <-> L."""
        return replace(
            self,
            omega_i=self.omega_j,
            omega_j=self.omega_i,
            T_R=self.T_L,
            T_L=self.T_R,
        )

    def with_temperatures(self, T_R: float, T_L: float) -> "BandPair":
        return replace(self, T_R=T_R, T_L=T_L)
