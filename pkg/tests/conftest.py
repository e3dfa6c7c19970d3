import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from quasicondensate import SpatialGrid, build_box_basis, derive_scales, rb87

settings.register_profile("repo", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

L_BOX = 100e-6


@pytest.fixture(scope="session")
def gas():
    return rb87(60e6, length=L_BOX)


@pytest.fixture(scope="session")
def scales(gas):
    return derive_scales(gas)


@pytest.fixture(scope="session")
def grid():
    return SpatialGrid(L_BOX, 256)


@pytest.fixture(scope="session")
def box(scales, grid):
    return build_box_basis(L_BOX, scales.sound_speed, 50, grid, scales.g1d)


@pytest.fixture(scope="session")
def small_box(scales):
    g = SpatialGrid(L_BOX, 64)
    return build_box_basis(L_BOX, scales.sound_speed, 12, g, scales.g1d)


def rel(a, b):
    return abs(a - b) / abs(b)


_ACCEPTANCE_LINES = []


def record_acceptance(line):
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
