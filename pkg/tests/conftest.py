import numpy as np
import pytest
from hypothesis import settings

from spinqed.mode_space import PhasePoint, build_grid

settings.register_profile("default", max_examples=25, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def small_grid():
    return build_grid(16, 6.0, 6, 12)


@pytest.fixture(scope="session")
def fine_grid():
    return build_grid(40, 8.0, 20, 40)


def random_point(grid, seed, decay=True):
    """Random transverse point; with ``decay`` the profile is Gaussian in |k|."""
    rng = np.random.default_rng(seed)
    w = np.exp(-0.5 * grid.kmag ** 2)[:, None] if decay else 1.0
    return PhasePoint(grid, w * rng.normal(size=(grid.size, 3)), w * rng.normal(size=(grid.size, 3)))
