"""Bath-band entanglement in a parametrically driven quantum Brownian oscillator."""
from .model import (BandPair, DomainError, Driving, SpectralModel, ValidityWarning,
                    planck_occupation, thermal_nu)
from .floquet import ConvergenceError, FloquetPoles, PoleError, floquet_coefficients

SCHEMA_VERSION = "1.0"

__all__ = [
    "BandPair", "DomainError", "Driving", "SpectralModel", "ValidityWarning",
    "planck_occupation", "thermal_nu", "ConvergenceError", "FloquetPoles", "PoleError",
    "floquet_coefficients", "SCHEMA_VERSION",
]
