import numpy as np
import pytest
from hypothesis import settings

from vecsum import SparseVector, WeightedPointSet

settings.register_profile("default", deadline=None)
settings.load_profile("default")


def dense_set(X, weights=None) -> WeightedPointSet:
    return WeightedPointSet.from_weights([SparseVector.from_dense(r) for r in np.asarray(X)], weights)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
