from __future__ import annotations

import numpy as np
import pytest

from neel.dynamics import Forcing
from neel.grid import Grid
from neel.periodic_orbit import find_periodic_wall
from neel.static_wall import solve_static_profile

NU = 0.5


@pytest.fixture(scope="session")
def grid_small() -> Grid:
    return Grid(30.0, 512)


@pytest.fixture(scope="session")
def wall_small(grid_small):
    return solve_static_profile(grid_small, tol=1e-10)


@pytest.fixture(scope="session")
def wall_tiny():
    """Small enough for dense monodromy assembly."""
    return solve_static_profile(Grid(16.0, 128), tol=1e-10)


@pytest.fixture(scope="session")
def forcing() -> Forcing:
    return Forcing("cosine", 1.0, 1.0)


@pytest.fixture(scope="session")
def orbit_small(wall_small, forcing):
    return find_periodic_wall(wall_small, 0.01, period=1.0, forcing=forcing, nu=NU, dt=1.0 / 1024,
                              snapshots=64, tol=1e-9)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE: list[str] = []


@pytest.fixture(scope="session")
def acceptance_report():
    """Record and print one pass/fail line per acceptance criterion, then assert it."""

    def report(number: int, title: str, ok: bool, detail: str) -> None:
        line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
