import numpy as np
import pytest

from ckde import _kernels


def random_spd(rng: np.random.Generator, dim: int, jitter: float = 0.5) -> np.ndarray:
    """A well-conditioned random symmetric positive-definite matrix."""
    m = rng.normal(size=(dim, dim))
    return m @ m.T / dim + jitter * np.eye(dim)


def mixture_points(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    """Clustered synthetic data with non-trivial correlations."""
    k = rng.integers(2, 5)
    centers = rng.normal(scale=4.0, size=(k, dim))
    labels = rng.integers(0, k, size=n)
    spread = 0.5 + rng.random(k)[labels, np.newaxis]
    return centers[labels] + spread * rng.normal(size=(n, dim))


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # Compile the jitted kernels before any timed test runs.
    _kernels.warm_up()
