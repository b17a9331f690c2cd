from __future__ import annotations

import numpy as np
import pytest

from cavity_queens.cavity import CavitySystem, standard_comb
from cavity_queens.hilbert import RestrictedBasis
from cavity_queens.problem import paper_instance

ACCEPTANCE_LINES: list[str] = []


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="also run tests marked slow (full trajectory ensembles)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="slow; pass --runslow to include")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def report():
    """Record and print one pass/fail line for an acceptance criterion."""

    def _report(number: int, title: str, passed: bool, detail: str) -> bool:
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2} {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return _report


@pytest.fixture(scope="session")
def paper():
    return paper_instance()


@pytest.fixture(scope="session")
def basis5():
    return RestrictedBasis(5)


@pytest.fixture(scope="session")
def solution_state(basis5):
    return basis5.basis_vector((1, 4, 2, 5, 3))


@pytest.fixture(scope="session")
def deep_system(paper):
    return CavitySystem.build(paper, standard_comb(5, 5), depth=None)


@pytest.fixture(scope="session")
def v10_system(paper):
    return CavitySystem.build(paper, standard_comb(5, 5), depth=10.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
