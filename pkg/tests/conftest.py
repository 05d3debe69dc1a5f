import numpy as np
import pytest

import symmetrize as sz


@pytest.fixture
def rng():
    return np.random.default_rng(42)


def random_nonneg(domain, rng, smooth=False):
    """Random nonnegative grid function; optionally smoothed noise."""
    vals = rng.uniform(0.0, 1.0, size=domain.shape)
    if smooth:
        for axis in range(domain.dim):
            for _ in range(3):
                vals = 0.5 * vals + 0.25 * (np.roll(vals, 1, axis) + np.roll(vals, -1, axis))
    return sz.grid_function(domain, vals)
