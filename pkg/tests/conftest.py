import numpy as np
import pytest

from crfconv.core.parallel import set_threads
from crfconv.models import NeighborGraph, PointCloud


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(autouse=True)
def single_thread():
    set_threads(1)
    yield
    set_threads(1)


@pytest.fixture
def two_node_graph():
    """Mutual neighbors 0 <-> 1."""
    return NeighborGraph.from_lists([[1], [0]])


@pytest.fixture
def line_cloud():
    def make(xs, features=None):
        positions = np.stack([np.asarray(xs, dtype=float), np.zeros(len(xs)), np.zeros(len(xs))], axis=1)
        if features is None:
            return PointCloud.from_positions(positions)
        return PointCloud(positions, np.asarray(features, dtype=float).reshape(len(xs), -1))

    return make
