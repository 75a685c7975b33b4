import functools

import numpy as np
import pytest

from ecca.simulate import setting_scenario, simulate


@functools.lru_cache(maxsize=None)
def cached_truth(setting, seed, noiseless=False):
    return simulate(setting_scenario(setting, seed=seed, noiseless=noiseless))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_orthonormal(rng, n, r, centered=False):
    g = rng.standard_normal((n, max(r, 1) if r else 1))
    if centered:
        g -= g.mean(axis=0)
    q, _ = np.linalg.qr(g)
    return q[:, :r]
