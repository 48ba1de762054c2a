import numpy as np
import pytest
from hypothesis import HealthCheck, settings

# numba compiles on first call, so the first example of a property can be slow
settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def well_conditioned(rng, n, cond=1e3):
    """Random n x n matrix with singular values spread over [1, cond]."""
    q1, _ = np.linalg.qr(rng.standard_normal((n, n)))
    q2, _ = np.linalg.qr(rng.standard_normal((n, n)))
    sv = np.geomspace(1.0, cond, n)
    return (q1 * sv) @ q2


def full_rank(rng, d, n):
    while True:
        A = rng.uniform(-1.0, 1.0, (d, n))
        if np.linalg.matrix_rank(A) == d:
            return A


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
