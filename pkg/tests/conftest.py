import numpy as np
import pytest

from qcdual import ChainParams, GaudinParams


def general_position_x(rng, N, eta=None, margin=0.05, width=None):
    """Sorted real points with pairwise gaps and |gap -/+ eta| above ``margin``."""
    width = 3.0 * N if width is None else width
    while True:
        x = np.sort(rng.uniform(0.0, width, N))
        d = np.abs(x[:, None] - x[None, :])[np.triu_indices(N, 1)]
        if d.size and d.min() < margin:
            continue
        if eta is not None and d.size and np.abs(np.abs(d) - abs(eta)).min() < margin:
            continue
        return x


def random_chain(rng, N, eta=None, complex_twist=False):
    eta = rng.uniform(0.1, 2.0) if eta is None else eta
    x = general_position_x(rng, N, eta)
    w1, w2 = rng.uniform(0.5, 2.5, 2)
    if complex_twist:
        w1, w2 = w1 + 0.3j, w2 - 0.2j
    return ChainParams(tuple(x), eta, w1, w2)


def random_gaudin(rng, N):
    x = general_position_x(rng, N)
    o1, o2 = rng.uniform(-1.5, 1.5, 2)
    return GaudinParams(tuple(x), o1, o2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def golden():
    """N=2 chain with eta=1, twist (2, 1), x=(0, 2)."""
    return ChainParams((0.0, 2.0), eta=1.0, w1=2.0, w2=1.0)
