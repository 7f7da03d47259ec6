import numpy as np
import pytest

from swtforecast.data import aggregate_sites, synthesize_pv


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def synthetic_matrix():
    """400-day aggregated synthetic dataset shared by pipeline-level tests."""
    return aggregate_sites(synthesize_pv(days=400, sites=3, seed=7, cloud_noise=0.25))
