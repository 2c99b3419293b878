import json
import os

import pytest

from shrinker_index import analytic_profile, angenent_torus, certify_index

HERE = os.path.dirname(os.path.abspath(__file__))
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def oracle():
    with open(os.path.join(HERE, "oracles", "values.json")) as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def torus2():
    return angenent_torus(2, h=1e-3)


@pytest.fixture(scope="session")
def torus2_coarse():
    return angenent_torus(2, h=1e-2)


@pytest.fixture(scope="session")
def torus3():
    return angenent_torus(3, h=1e-3)


@pytest.fixture(scope="session")
def sphere2():
    return analytic_profile("sphere", 2, h=1e-3)


@pytest.fixture(scope="session")
def cylinder2():
    return analytic_profile("cylinder", 2, h=1e-3, half_length_R=12.0)


@pytest.fixture(scope="session")
def plane2():
    return analytic_profile("plane", 2, h=1e-3)


@pytest.fixture(scope="session")
def torus2_certificate(torus2):
    return certify_index(torus2, seed=7)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
