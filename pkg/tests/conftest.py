import warnings

import pytest

from drivenqbm import BandPair, Driving, SpectralModel


@pytest.fixture(scope="session")
def model():
    return SpectralModel(gamma0=0.005, cutoff=80.0, m=1.0, split_R=0.5)


@pytest.fixture(scope="session")
def driving():
    return Driving(omega_r=4.0, V=0.5, omega_d=3.95)


@pytest.fixture(scope="session")
def pair():
    """Resonant pair of the energy figure: w_i = w_d - delta, w_j = delta."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return BandPair(3.9, 0.05, delta_omega=1e-3, mass_ratio=10.0)


@pytest.fixture(scope="session")
def mid_pair():
    return BandPair(1.975 + 0.2, 1.975 - 0.2, delta_omega=1e-3, mass_ratio=10.0)


_ACCEPTANCE: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line for the acceptance summary."""
    def _add(criterion: str, ok: bool, detail: str):
        line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'} | {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return ok
    return _add


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: s.split(":")[0]):
            terminalreporter.write_line(line)
