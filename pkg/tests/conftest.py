import re

import numpy as np
import pytest

from wolbachia_control import BiologicalParams, CubicKinetics, make_wolbachia_kinetics

# (number, description, passed) for every acceptance criterion that ran
CRITERIA = []


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label, text, ok in sorted(CRITERIA, key=lambda c: (int(re.match(r"\d+", c[0]).group()), c[0])):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {label:>3}: {text}")


@pytest.fixture
def report():
    """Record one acceptance line, print it, and assert it."""

    def _report(label, text, ok):
        CRITERIA.append((str(label), text, bool(ok)))
        print(f"[{'PASS' if ok else 'FAIL'}] criterion {label}: {text}")
        assert ok, text

    return _report


@pytest.fixture(scope="session")
def kin():
    return make_wolbachia_kinetics(BiologicalParams())


@pytest.fixture(scope="session")
def cubic():
    return CubicKinetics(0.3)


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)
