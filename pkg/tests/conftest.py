import numpy as np
import pytest

from choquardlab.grid import Field, GridSpec


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def smooth_random_field(grid: GridSpec, rng, bumps: int = 3, width: float = 1.0) -> Field:
    """Sum of a few Gaussians with random centres, widths and signs."""
    coords = grid.coordinates()
    v = np.zeros(grid.shape)
    for _ in range(bumps):
        c = rng.uniform(-grid.half_length / 4, grid.half_length / 4, grid.dimension)
        w = width * rng.uniform(0.7, 1.5)
        r2 = sum((x - c0) ** 2 for x, c0 in zip(coords, c))
        v += rng.uniform(0.5, 1.5) * rng.choice([-1, 1]) * np.exp(-r2 / w**2)
    return Field(grid, v)


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[k])
