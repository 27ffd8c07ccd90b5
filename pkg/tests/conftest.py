from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from detflops.picardlattice import load_fixtures, shipped_fixture_path
from detflops.tensorcore import diagonal_instance, random_instance

settings.register_profile("repo", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


@pytest.fixture(scope="session")
def flagship():
    return random_instance(1, 5, 42, 9)


@pytest.fixture(scope="session")
def diagonal():
    return diagonal_instance(1, 2)


@pytest.fixture(scope="session")
def oracle_instance():
    # first seed smooth over F_3, F_5 and their cubic towers (checked in test_picardlattice)
    return random_instance(1, 3, 4, 9)


@pytest.fixture(scope="session")
def flagship_fixtures():
    N, mats, meta = load_fixtures(shipped_fixture_path())
    return N, mats, meta


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
