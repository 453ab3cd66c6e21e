from fractions import Fraction

import numpy as np
import pytest

from app.core.errors import ConfigError
from app.core.lattice import BINARY, CO_OXIDATION, VON_NEUMANN_2D, Event, Lattice, neighborhood_sites
from app.observables.observable import (
    Coverage,
    Hamiltonian,
    PairCorrelation,
    SpeciesCoverage,
    get_observable,
)
from app.observables.partition import Partition


def random_changes(sigma, generator, values=(0, 1), n_changes=2):
    """随机挑选若干格点改成另一个取值"""
    sites = generator.choice(len(sigma), size=n_changes, replace=False)
    changes = []
    for s in sites:
        old = int(sigma[s])
        new = int(generator.choice([v for v in values if v != old]))
        changes.append((int(s), old, new))
    return changes


def applied(sigma, changes):
    updated = sigma.copy()
    for s, _, new in changes:
        updated[s] = new
    return updated


def test_coverage_values(coverage6):
    assert coverage6.eval(np.array([1, 0, 1, 1, 0, 0])) == 0.5
    assert coverage6.eval(np.zeros(6, dtype=np.int8)) == 0.0


def test_coverage_deltas():
    lattice = Lattice((100,))
    coverage = Coverage(lattice, BINARY)
    sigma = np.zeros(100, dtype=np.int8)
    # 场景1: 吸附一个粒子
    assert coverage.delta(sigma, [(3, 0, 1)]) == pytest.approx(0.01)
    # 场景2: 扩散不改变覆盖度，且严格为零
    sigma[3] = 1
    assert coverage.delta(sigma, [(3, 1, 0), (4, 0, 1)]) == 0
    assert coverage.exact_delta(sigma, [(3, 1, 0), (4, 0, 1)]) == Fraction(0)


def test_coverage_reaction_on_square_lattice():
    lattice = Lattice((10, 10))
    coverage = Coverage(lattice, CO_OXIDATION)
    sigma = np.zeros(100, dtype=np.int8)
    x = lattice.site((4, 4))
    sites = neighborhood_sites(lattice, VON_NEUMANN_2D, x)
    sigma[x] = -1
    sigma[sites[1]] = 1
    omega = [int(sigma[s]) for s in sites]
    omega[0] = 0
    omega[1] = 0
    event = Event(x, tuple(omega), "reaction:1")
    assert coverage.event_delta(sigma, event, sites) == pytest.approx(-0.02)


def test_species_coverage():
    lattice = Lattice((2, 2))
    co = SpeciesCoverage(lattice, CO_OXIDATION, -1)
    sigma = np.array([-1, 0, 1, -1], dtype=np.int8)
    assert co.eval(sigma) == 0.5
    assert co.delta(sigma, [(1, 0, -1)]) == 0.25
    assert co.delta(sigma, [(0, -1, 1)]) == -0.25
    with pytest.raises(ConfigError):
        SpeciesCoverage(lattice, BINARY, -1)


@pytest.mark.parametrize("shape, r", [((9,), 1), ((9,), 2), ((4, 4), 1), ((4, 4), 2), ((5, 3), 1)])
def test_pair_correlation_delta_matches_full_eval(shape, r):
    lattice = Lattice(shape)
    obs = PairCorrelation(lattice, BINARY, r)
    generator = np.random.default_rng(7)
    for _ in range(50):
        sigma = generator.integers(0, 2, size=lattice.n_sites).astype(np.int8)
        changes = random_changes(sigma, generator)
        expected = obs.count(applied(sigma, changes)) - obs.count(sigma)
        assert obs.count_delta(sigma, changes) == expected
        assert obs.exact_delta(sigma, changes) == Fraction(expected, obs.denominator)


def test_pair_correlation_value():
    obs = PairCorrelation(Lattice((4,)), BINARY, 1)
    # 占据 0,1,2：相邻对 (0,1),(1,2)
    assert obs.eval(np.array([1, 1, 1, 0])) == 0.5
    with pytest.raises(ConfigError):
        PairCorrelation(Lattice((4,)), BINARY, 0)


@pytest.mark.parametrize("shape", [(8,), (4, 4), (3, 5)])
def test_hamiltonian_delta_matches_full_eval(shape):
    lattice = Lattice(shape)
    obs = Hamiltonian(lattice, J=1.3, h=-0.4)
    generator = np.random.default_rng(11)
    for _ in range(50):
        sigma = generator.integers(0, 2, size=lattice.n_sites).astype(np.int8)
        changes = random_changes(sigma, generator, n_changes=1 + int(generator.integers(0, 3)))
        expected = obs.eval(applied(sigma, changes)) - obs.eval(sigma)
        assert obs.delta(sigma, changes) == pytest.approx(expected, abs=1e-12)
        assert float(obs.exact_delta(sigma, changes)) == pytest.approx(expected, abs=1e-12)


def test_hamiltonian_value():
    obs = Hamiltonian(Lattice((4,)), J=1.0, h=0.5)
    # 键 (0,1),(1,2)，三个占据位
    assert obs.eval(np.array([1, 1, 1, 0])) == pytest.approx(-2 - 1.5)


def test_get_observable():
    lattice = Lattice((6,))
    assert isinstance(get_observable("coverage", lattice, BINARY), Coverage)
    assert get_observable("pair_correlation", lattice, BINARY, r=2).r == 2
    with pytest.raises(ConfigError):
        get_observable("species_coverage", lattice, BINARY)
    with pytest.raises(ConfigError):
        get_observable("hamiltonian", lattice, BINARY)
    with pytest.raises(ConfigError):
        get_observable("energy", lattice, BINARY)


def test_default_partition_classification(default_partition):
    # 场景: 下标从 0 开始，负增量为 0，零为 1，正增量为 2
    assert default_partition.size == 3
    assert default_partition.classify(-0.01) == 0
    assert default_partition.classify(0.0) == 1
    assert default_partition.classify(0.01) == 2
    assert default_partition.zero_class() == 1


def test_partition_parse():
    assert Partition.parse("(-inf,0); {0}; (0,inf)") == Partition.default()
    partition = Partition.parse("(-inf,-0.5); [-0.5,0.5]; (0.5,inf)")
    assert partition.classify(-0.5) == 1
    assert partition.classify(0.5) == 1
    assert partition.classify(0.51) == 2
    two = Partition.parse("(-inf,0]; (0,inf)")
    assert two.classify(0.0) == 0
    assert two.zero_class() == 0


@pytest.mark.parametrize("text", [
    "(-inf,0); (0,inf)",        # 0 处缺口
    "(-inf,0]; [0,inf)",        # 0 处重叠
    "(-inf,0); {0}",            # 未覆盖正半轴
    "(-inf,0); {0}; (1,inf)",   # (0,1] 缺口
    "(-inf,0); <0>; (0,inf)",   # 无法解析
    "",
])
def test_partition_parse_errors(text):
    with pytest.raises(ConfigError):
        Partition.parse(text)
