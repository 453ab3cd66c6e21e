import numpy as np
import pytest

from app.core.lattice import Lattice
from app.observables.observable import Coverage
from app.observables.partition import Partition
from app.schemas.experiment_config import ObservableSection
from app.schemas.parameters import ModelSpec, ParameterVector


def ising_spec(beta=1.0, J=1.0, h=1.0, c_a=1.0, c_d=1.0) -> ModelSpec:
    return ModelSpec(rule="ising_ad",
                     parameters=ParameterVector(beta=beta, J=J, h=h, c_a=c_a, c_d=c_d))


def diffusion_spec(beta=0.1, J=1.0, h=0.0, c_a=1.0, c_d=1.0, c_diff=1.0) -> ModelSpec:
    return ModelSpec(rule="ad_diffusion",
                     parameters=ParameterVector(beta=beta, J=J, h=h, c_a=c_a, c_d=c_d, c_diff=c_diff))


@pytest.fixture
def chain6():
    return Lattice((6,))


@pytest.fixture
def coverage_section():
    return ObservableSection()


@pytest.fixture
def default_partition():
    return Partition.default()


@pytest.fixture
def coverage6(chain6):
    from app.core.lattice import BINARY

    return Coverage(chain6, BINARY)


@pytest.fixture
def random_pairs():
    """固定种子的随机构型对生成器"""

    def make(n_sites, count, seed=2024, values=(0, 1)):
        generator = np.random.default_rng(seed)
        return [
            (generator.choice(values, size=n_sites).astype(np.int8),
             generator.choice(values, size=n_sites).astype(np.int8))
            for _ in range(count)
        ]

    return make
