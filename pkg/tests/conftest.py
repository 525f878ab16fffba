import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hexllg.lattice import build_lattice

settings.register_profile(
    "default", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def lat44():
    return build_lattice(4, 4, 1.0)


@pytest.fixture(scope="session")
def lat12():
    return build_lattice(2, 3, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_unit(rng, n):
    m = rng.standard_normal((n, 3))
    return m / np.linalg.norm(m, axis=1, keepdims=True)


def brute_min_image(delta, periods, reach=2):
    """Shortest representative by scanning a block of periodic images."""
    best = None
    for a in range(-reach, reach + 1):
        for b in range(-reach, reach + 1):
            cand = delta + a * periods[0] + b * periods[1]
            if best is None:
                best = cand.copy()
            else:
                closer = np.linalg.norm(cand, axis=-1) < np.linalg.norm(best, axis=-1) - 1e-12
                best[closer] = cand[closer]
    return best


def unwrapped_bond(lat, k):
    """Mask of (node, j) bonds that do not cross the periodic boundary."""
    nb = lat.neighbors[k]
    raw = np.linalg.norm(lat.positions[nb] - lat.positions[:, None, :], axis=-1)
    from hexllg.lattice import DISTANCE

    return np.abs(raw - DISTANCE[k] * lat.h) < 1e-9
