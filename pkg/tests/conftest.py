import numpy as np
import pytest

from persistence_lab import RegularlyVaryingWeight, estimate_persistence, gaussian


@pytest.fixture(scope="session")
def small_gaussian_run():
    """Shared small (2e4-trial) alpha=0 Gaussian sweep for fast tests."""
    weight = RegularlyVaryingWeight(alpha=0.0)
    dist = gaussian()
    return [
        estimate_persistence(n, weight, dist, 20_000, master_seed=4242, point_index=i)
        for i, n in enumerate([16, 32, 64, 128, 256])
    ]


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240601)
