import numpy as np
import pytest

from accmax.scenario import ScenarioModel, toy_model


@pytest.fixture(scope="session")
def toy():
    return toy_model()


def uniform_model(values) -> ScenarioModel:
    """Single-asset placeholder model with uniform probabilities over ``len(values)`` states."""
    n = len(values)
    return ScenarioModel(np.full(n, 1.0 / n), np.ones((1, n)))


@pytest.fixture
def uniform4():
    return uniform_model([0, 0, 0, 0])


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
