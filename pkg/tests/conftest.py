import pytest
from hypothesis import HealthCheck, settings

from dysonrg.certify import decimation_seed, majority_seed
from dysonrg.rgmap import HamiltonianSpec, hamiltonian_hat

settings.register_profile("repo", derandomize=True, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

GAMMA = 40.0


@pytest.fixture(scope="session")
def majority():
    """Majority-rule seed and the base point ``c0 + H0`` at gamma = 40."""
    seed = majority_seed(GAMMA)
    h0, _ = hamiltonian_hat(HamiltonianSpec(GAMMA))
    return seed, seed.c0 + h0


@pytest.fixture(scope="session")
def decimation():
    seed = decimation_seed(GAMMA)
    h0, _ = hamiltonian_hat(HamiltonianSpec(GAMMA))
    return seed, seed.c0 + h0


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not any(mod.RESULTS.values()):
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
