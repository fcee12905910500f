import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ternary_ch import ModelParams, build_structured_mesh, init_state  # noqa: E402
from ternary_ch.benchmarks import convergence_ics  # noqa: E402

UNIT = (0.0, 1.0, 0.0, 1.0)


@pytest.fixture(scope="session")
def unit2():
    return build_structured_mesh(UNIT, 2, 2)


@pytest.fixture(scope="session")
def unit16():
    return build_structured_mesh(UNIT, 16, 16)


@pytest.fixture(scope="session")
def unit64():
    return build_structured_mesh(UNIT, 64, 64)


@pytest.fixture(scope="session")
def conv_params():
    return ModelParams(epsilon=0.02, lam=1e-4, Lambda=7.0, mobility=1e-4, sigma=(1.0, 1.0, 1.0))


@pytest.fixture(scope="session")
def conv_state16(unit16, conv_params):
    return init_state(unit16, convergence_ics(), conv_params)


def pure_state(mesh, which=0, n_phases=3):
    from ternary_ch.schemes import PhaseState

    phases = np.zeros((n_phases, mesh.n_vertices))
    phases[which] = 1.0
    return PhaseState(mesh, 0.0, phases, np.zeros_like(phases))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
