"""Shared fixtures: a small calibrated transform pair reused across files.

The pair is deliberately modest (24 lambda nodes, 8 Hermite levels, a
36 x 36 x 48 box) so the whole suite stays fast; the acceptance tests pin
the production-sized configurations.
"""

import numpy as np
import pytest

from subwave.spectral import build_grid
from subwave.transform import SpatialGrid, calibrate_plancherel, from_function


def packet(carrier=1.6, sigma_xy=0.8, sigma_tau=1.35, scale=1.0):
    """Modulated Gaussian wave packet; broadcastable over grid axes."""

    def fn(x, y, t):
        env = np.exp(-(x * x + y * y) / (2 * sigma_xy ** 2)
                     - t * t / (2 * sigma_tau ** 2))
        return scale * np.cos(carrier * t) * env

    return fn


@pytest.fixture(scope="session")
def synth_box():
    # tau half-width 8.5 keeps the sigma_tau = 1.35 reference packet below
    # the 1e-8 boundary-decay gate of the forward transform
    return SpatialGrid((5.0, 5.0, 8.5), (36, 36, 48))


@pytest.fixture(scope="session")
def calibrated_grid(synth_box):
    grid = build_grid(0.25, 6.0, 24, 15.0, n=1)
    reference = from_function(synth_box, packet())
    calibrate_plancherel(reference, grid)
    return grid


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
