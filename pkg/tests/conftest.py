from pathlib import Path

import numpy as np
import pytest

from sphdir.core.sampling import RandomSource, sample_sdd

DATA_DIR = Path(__file__).parent / "data"

TABLE1_ALPHAS = [
    (2.0, 2.0, 2.0),
    (5.0, 15.0, 2.0),
    (0.5, 0.5, 2.0),
    (2.0, 2.0, 10.0),
]


def random_alphas(count, low=0.6, high=20.0, dims=(2, 3), seed=12345):
    """Reproducible list of alpha vectors with entries uniform on [low, high]."""
    rng = np.random.default_rng(seed)
    return [rng.uniform(low, high, size=int(rng.choice(dims))) for _ in range(count)]


@pytest.fixture
def source():
    return RandomSource(20240601)


@pytest.fixture(scope="session")
def term_frequencies_path():
    return DATA_DIR / "term_frequencies.csv"


@pytest.fixture(scope="session")
def table1_samples():
    """The four simulation scenarios at n = 10^4, scenario i drawn with seed 42 + i."""
    return [sample_sdd(alpha, 10_000, RandomSource(42 + i)) for i, alpha in enumerate(TABLE1_ALPHAS)]


@pytest.fixture(scope="session")
def sample_222():
    return sample_sdd((2.0, 2.0, 2.0), 10_000, RandomSource(42))
