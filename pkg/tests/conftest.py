import numpy as np
import pytest

from idlalab import (
    PercolationConfig,
    ball_vertices,
    extract_cluster,
    full_lattice,
)


@pytest.fixture(scope="session")
def plus():
    """Full lattice with the 5-vertex ball around the origin (radius 1.2)."""
    graph = full_lattice(2, 8)
    dom = ball_vertices(graph, (0, 0), 1.2)
    assert dom.size == 5
    return graph, dom


@pytest.fixture(scope="session")
def lattice2d():
    return full_lattice(2, 10)


@pytest.fixture(scope="session")
def cluster_small():
    """Supercritical cluster in a 41x41 box, reused across test modules."""
    return extract_cluster(PercolationConfig(2, 0.8, 20, 3))


@pytest.fixture(scope="session")
def cluster_wide():
    """Bigger cluster for the regularity checks."""
    return extract_cluster(PercolationConfig(2, 0.8, 36, 3))


def origin_slot(domain: np.ndarray, row: int) -> int:
    i = int(np.searchsorted(domain, row))
    assert domain[i] == row
    return i
