import numpy as np
import pytest

from helixslice import HelixParams, scan_flexible


@pytest.fixture(scope="session")
def default_params():
    return HelixParams()


@pytest.fixture(scope="session")
def small_cloud(default_params):
    """400-point flexible scan; cheap enough for per-test fits."""
    return scan_flexible(default_params, 400, 0.05, seed=11)


@pytest.fixture(scope="session")
def ring_points():
    """2,000 points uniform on a radius-10 circle (SOM sanity input)."""
    rng = np.random.default_rng(424242)
    ang = rng.uniform(0, 2 * np.pi, 2000)
    return np.stack([10 * np.cos(ang), 10 * np.sin(ang)], axis=1)
