import numpy as np
import pytest

from riverbed.cases import get_case
from riverbed.forward import SolverConfig, solve_forward
from riverbed.measurement import NoiseSpec, generate_measured_data


@pytest.fixture(scope="session")
def case_a():
    return get_case("a")


@pytest.fixture(scope="session")
def coarse_run(case_a):
    """50-cell P2 forward run of case (a) under its initial guess."""
    cfg = SolverConfig(2, 50, case_a.final_time)
    traj, trace = solve_forward(case_a.ic, case_a.bottom, case_a.p_initial, cfg)
    return cfg, traj, trace


@pytest.fixture(scope="session")
def clean_data_a(case_a):
    # cheaper than the 400/P3 data run but still a different discretisation
    return generate_measured_data(case_a, SolverConfig(3, 100, case_a.final_time), NoiseSpec(0.0, 0.0, 0))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture(scope="session")
def acceptance_log(pytestconfig):
    return pytestconfig.stash.setdefault(_ACCEPTANCE_KEY, {})


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, {})
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(lines):
        terminalreporter.write_line(lines[n])
