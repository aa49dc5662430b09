import numpy as np
import pytest

from boltzmann.services.model import RbmParams


def random_params(m: int, n: int, seed: int = 0, scale: float = 1.0) -> RbmParams:
    rng = np.random.default_rng(seed)
    return RbmParams(rng.normal(0, scale, (n, m)), rng.normal(0, scale, m), rng.normal(0, scale, n))


@pytest.fixture
def small_params():
    """m=4 visible, n=3 hidden, N(0, 1) entries."""
    return random_params(4, 3, seed=7)


@pytest.fixture(autouse=True)
def _output_dir(settings, tmp_path):
    settings.RBM_OUTPUT_DIR = tmp_path / 'runs'
