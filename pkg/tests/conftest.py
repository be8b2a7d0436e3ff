import numpy as np
import pytest

from pwsurv.grid import TimeGrid
from pwsurv.heads import HeadKind, output_dim


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_grid(rng, n_segments=None, t_max_hint=5.0):
    """Non-uniform grid with random interior points."""
    if n_segments is None:
        n_segments = int(rng.integers(1, 9))
    interior = np.sort(rng.uniform(0.05 * t_max_hint, t_max_hint, n_segments))
    return TimeGrid(np.concatenate([[0.0], interior]))


def random_head_instance(rng, kind: HeadKind, n_segments=None, z_range=3.0):
    grid = random_grid(rng, n_segments)
    z = rng.uniform(-z_range, z_range, output_dim(kind, grid.n_segments))
    return grid, z


ALL_KINDS = list(HeadKind)
