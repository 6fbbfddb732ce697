import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20250823)


def random_weights(rng, m):
    """A strictly positive random point on the m-simplex."""
    w = rng.dirichlet(np.ones(m))
    w = np.maximum(w, 1e-12)
    return w / w.sum()
