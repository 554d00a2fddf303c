import numpy as np
import pytest

from v3h.dataset import apply_missing, generate_synthetic


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_blobs():
    return generate_synthetic(n=30, c=3, dims=[4, 5], sep=10.0, noise=0.5, seed=3)


@pytest.fixture
def small_incomplete(small_blobs):
    return apply_missing(small_blobs, 0.2, seed=7)
