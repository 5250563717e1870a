import math
import sys

import numpy as np
import pytest
from hypothesis import settings

from slabmhd.core import GridSpec, gaussian_packet

settings.register_profile("repo", deadline=None, max_examples=30)
settings.load_profile("repo")


@pytest.fixture
def box():
    """Small 2 pi periodic slab for closed-form checks."""
    return GridSpec(16, 16, 8, 1.0, lh=2 * math.pi)


@pytest.fixture
def packet_grid():
    return GridSpec(32, 32, 8, 1.0)


@pytest.fixture
def packet(packet_grid):
    return gaussian_packet(packet_grid, 0.01, widths=(5.0, 5.0), seed=3)


def random_smooth(grid, rng, parity="cos", modes=5):
    """Random field built from a few low basis functions of the given parity."""
    x1, x2, x3 = grid.mesh()
    s = x3 / grid.delta
    f = np.zeros(grid.shape)
    for _ in range(modes):
        a, b = rng.integers(-3, 4, 2)
        k = rng.integers(0 if parity == "cos" else 1, 4)
        vert = np.cos(k * np.pi * (s + 1) / 2) if parity == "cos" else np.sin(k * np.pi * (s + 1) / 2)
        f += rng.normal() * np.cos(2 * np.pi * (a * x1 / grid.l1 + b * x2 / grid.l2) + rng.uniform(0, 6.3)) * vert
    return f


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    results = getattr(acceptance, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
