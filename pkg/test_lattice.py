import numpy as np
import pytest

from app.core.errors import LatticeError
from app.core.lattice import (
    BINARY,
    CHAIN_1D,
    CO_OXIDATION,
    EVANS_17,
    VON_NEUMANN_2D,
    Event,
    Lattice,
    NeighborhoodShape,
    apply_update,
    dependency_shape,
    event_changes,
    flip,
    make_configuration,
    neighborhood_sites,
    single_site_shape,
)
from app.utils.fenwick import FenwickTree


def test_lattice_basics():
    lattice = Lattice((4, 5))
    assert lattice.dimension == 2
    assert lattice.n_sites == 20
    assert lattice.coords(7) == (1, 2)
    assert lattice.site((1, 2)) == 7
    # 周期回绕
    assert lattice.site((-1, 0)) == lattice.site((3, 0))
    assert lattice.site((0, 5)) == 0


def test_lattice_rejects_bad_shapes():
    with pytest.raises(LatticeError):
        Lattice((0,))
    with pytest.raises(LatticeError):
        Lattice((2, 2, 2))
    with pytest.raises(LatticeError):
        Lattice((5,)).validate_site(5)
    with pytest.raises(LatticeError):
        Lattice((5,)).coords(-1)


def test_periodic_distance():
    lattice = Lattice((10,))
    assert lattice.distance(0, 9) == 1
    assert lattice.distance(0, 5) == 5
    assert Lattice((4, 4)).distance(0, 15) == 2


def test_neighborhood_chain_wraps():
    # 场景: N=5 的链上 x=0 的邻域为 (自身, 左, 右)
    assert neighborhood_sites(Lattice((5,)), CHAIN_1D, 0) == [0, 4, 1]


def test_neighborhood_von_neumann_order():
    lattice = Lattice((4, 4))
    x = lattice.site((1, 1))
    expected = [lattice.site(c) for c in ((1, 1), (1, 2), (0, 1), (1, 0), (2, 1))]
    assert neighborhood_sites(lattice, VON_NEUMANN_2D, x) == expected


def test_evans_neighborhood_overlaps_on_4x4():
    sites = neighborhood_sites(Lattice((4, 4)), EVANS_17, 0)
    assert len(sites) == 17
    # 4×4 上 ±2 位移重合，17 个槽位并不全部互异
    assert len(set(sites)) < 17
    sites = neighborhood_sites(Lattice((5, 5)), EVANS_17, 0)
    assert len(set(sites)) == 17


def test_neighbor_table_out_of_range():
    with pytest.raises(LatticeError):
        neighborhood_sites(Lattice((5,)), CHAIN_1D, 5)


def test_shape_validation():
    with pytest.raises(LatticeError):
        NeighborhoodShape("bad", ((1,), (0,)))
    with pytest.raises(LatticeError):
        NeighborhoodShape("dup", ((0,), (1,), (1,)))
    assert EVANS_17.k == 17


def test_dependency_shape_contains_reflected_offsets():
    deps = dependency_shape(CHAIN_1D)
    assert set(deps.offsets) == {(0,), (1,), (-1,)}
    deps = dependency_shape(CHAIN_1D, [(0,), (1,), (-1,)])
    assert set(deps.offsets) == {(-2,), (-1,), (0,), (1,), (2,)}


def test_apply_update_single_site_flip():
    lattice = Lattice((3,))
    sigma = np.array([0, 1, 0], dtype=np.int8)
    updated = apply_update(sigma, Event(1, (0,), "flip"), lattice, single_site_shape(1))
    assert updated.tolist() == [0, 0, 0]
    assert sigma.tolist() == [0, 1, 0]


def test_apply_update_identity_when_omega_matches():
    lattice = Lattice((3,))
    sigma = np.array([1, 0, 1], dtype=np.int8)
    event = Event(1, (0, 1, 1), "noop")
    assert event_changes(sigma, event, neighborhood_sites(lattice, CHAIN_1D, 1)) == []
    assert apply_update(sigma, event, lattice, CHAIN_1D).tolist() == [1, 0, 1]


def test_apply_update_exchange():
    lattice = Lattice((4,))
    shape = NeighborhoodShape("self_right", ((0,), (1,)))
    sigma = np.array([1, 0, 0, 0], dtype=np.int8)
    assert apply_update(sigma, Event(0, (0, 1), "hop"), lattice, shape).tolist() == [0, 1, 0, 0]


def test_event_changes_on_degenerate_chain():
    # N=2 时左右邻居是同一个格点，只有与事件前取值不同的槽位才写入
    lattice = Lattice((2,))
    sigma = np.array([0, 1], dtype=np.int8)
    sites = neighborhood_sites(lattice, CHAIN_1D, 0)
    assert sites == [0, 1, 1]
    assert event_changes(sigma, Event(0, (1, 1, 1), "flip"), sites) == [(0, 0, 1)]
    assert event_changes(sigma, Event(0, (1, 0, 1), "hop:1"), sites) == [(0, 0, 1), (1, 1, 0)]


def test_event_changes_length_mismatch():
    with pytest.raises(LatticeError):
        event_changes(np.zeros(3, dtype=np.int8), Event(0, (1,), "flip"), [0, 2, 1])


def test_flip():
    assert flip(np.array([0, 0]), 0).tolist() == [1, 0]
    assert flip(np.array([1, 1]), 1).tolist() == [1, 0]
    sigma = np.array([1, 0, 1, 1], dtype=np.int8)
    assert np.array_equal(flip(flip(sigma, 2), 2), sigma)
    with pytest.raises(LatticeError):
        flip(sigma, 4)
    with pytest.raises(LatticeError):
        flip(np.array([-1, 0]), 0, CO_OXIDATION)


def test_make_configuration_validates():
    lattice = Lattice((3,))
    assert make_configuration(lattice, [1, 0, 1]).dtype == np.int8
    with pytest.raises(LatticeError):
        make_configuration(lattice, [1, 0])
    with pytest.raises(LatticeError):
        make_configuration(lattice, [1, 0, 2], BINARY)


def test_fenwick_prefix_and_find():
    tree = FenwickTree([1.0, 0.0, 3.0, 2.0])
    assert tree.total() == 6.0
    assert tree.prefix(3) == 4.0
    assert tree.range_sum(2, 4) == 5.0
    assert tree.find(0.5) == 0
    # 累计和恰好等于 1 时跳过零权重
    assert tree.find(1.0) == 2
    assert tree.find(5.5) == 3
    tree.set(1, 4.0)
    assert tree.total() == 10.0
    assert tree.find(2.0) == 1
    assert tree.find(0.5, lo=2, hi=4) == 2


@pytest.mark.parametrize("shape, dims", [
    (CHAIN_1D, (3,)),
    (VON_NEUMANN_2D, (3, 3)),
    (EVANS_17, (5, 5)),
    (EVANS_17, (6, 7)),
])
def test_neighborhood_sites_are_distinct(shape, dims):
    # 场景：边长超过邻域跨度时 k 个格点互不相同
    lattice = Lattice(dims)
    for x in range(lattice.n_sites):
        sites = neighborhood_sites(lattice, shape, x)
        assert len(sites) == shape.k
        assert len(set(sites)) == shape.k
        assert sites[0] == x
