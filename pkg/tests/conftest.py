from pathlib import Path

import numpy as np
import pytest

from qmix.hermitian import random_density
from qmix.mixture import four_state_mixture, linear_mixture, orthogonal_mixture, tetrahedron_mixture

DATA_DIR = Path(__file__).resolve().parents[1] / 'data'


def random_mixture(rng: np.random.Generator, M: int, d: int):
    return linear_mixture([random_density(d, rng) for _ in range(M)])


def random_point(rng: np.random.Generator, M: int, margin: float = 0.05) -> np.ndarray:
    return margin / M + (1 - margin) * rng.dirichlet(np.ones(M))


@pytest.fixture
def rng():
    return np.random.default_rng(20100101)


@pytest.fixture
def data_dir():
    return DATA_DIR


@pytest.fixture
def orthogonal_qubits():
    return orthogonal_mixture(2)


@pytest.fixture
def tetrahedron():
    return tetrahedron_mixture()


@pytest.fixture
def four_states():
    return four_state_mixture()
