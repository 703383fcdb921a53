import numpy as np
import pytest

from renewalctl import build_task_model
from renewalctl.sim.scenarios import one_class_spec, ten_class_spec

# filled by test_acceptance.py; echoed at the end of the session
ACCEPTANCE_LINES: list = []


@pytest.fixture
def one_class():
    return build_task_model(one_class_spec())


@pytest.fixture
def one_class_free():
    return build_task_model(one_class_spec(0.0))


@pytest.fixture
def ten_class():
    return build_task_model(ten_class_spec())


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
