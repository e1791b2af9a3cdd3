import numpy as np
import pytest

import qgraph as qg


@pytest.fixture(scope="session")
def star3():
    return qg.star_graph([1.0, 1.0, 1.0])


@pytest.fixture(scope="session")
def star3_eig(star3):
    # moderate mesh: fine enough for 1e-6 trace checks, fast enough to share
    return qg.solve_spectrum(star3, elements_per_edge=128, num_modes=20)


@pytest.fixture(scope="session")
def star3_analytic():
    return qg.star_analytic(3, 1.0, num_clusters=8)


@pytest.fixture(scope="session")
def interval_eig():
    return qg.interval_analytic(1.0, num_modes=12)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
