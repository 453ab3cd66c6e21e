import math

import numpy as np
import pytest

from app.core.lattice import Lattice
from app.engine.catalog import EventCatalog
from app.engine.rng import RngStream, exponential_from_uniform
from app.engine.simulation import GridRecorder, KMCEngine, sample_jump, simulate_path
from app.models import build_model
from app.observables.observable import Coverage
from app.observables.partition import Partition
from app.schemas.parameters import ModelSpec, ParameterVector
from conftest import diffusion_spec, ising_spec

ZGB = ModelSpec(rule="zgb", parameters=ParameterVector(c_a=0.5, c_r=1.0))
EVANS = ModelSpec(rule="evans_co", parameters=ParameterVector(c_a=0.5, c_d=0.1, c_r=1.0, c_diff=2.0))


def test_all_vacant_total_rate():
    model = build_model(ising_spec(), Lattice((100,)))
    catalog = EventCatalog(model, np.zeros(100, dtype=np.int8))
    assert catalog.total_rate() == pytest.approx(100.0)
    assert len(catalog.events()) == 100


def test_absorbing_state():
    model = build_model(ising_spec(c_a=0.0), Lattice((10,)))
    catalog = EventCatalog(model, np.zeros(10, dtype=np.int8))
    assert catalog.total_rate() == 0.0
    assert sample_jump(catalog, RngStream.from_seed(1)) == (math.inf, None)

    # 吸收态：整条路径停在初始值上
    path = simulate_path(model, np.zeros(10, dtype=np.int8), 5.0, [0.0, 2.5, 5.0],
                         Coverage(model.lattice, model.species), RngStream.from_seed(1))
    assert path.n_events == 0
    assert path.values.tolist() == [0.0, 0.0, 0.0]


@pytest.mark.parametrize("spec, shape, rebuild_interval", [
    (diffusion_spec(beta=1.0, J=1.0, h=0.5), (20,), None),
    (diffusion_spec(), (20,), 7),
    (ising_spec(), (6, 6), None),
    (ZGB, (6, 6), None),
    (EVANS, (5, 5), None),
    (EVANS, (6, 5), 11),
])
def test_catalog_matches_full_enumeration(spec, shape, rebuild_interval):
    lattice = Lattice(shape)
    model = build_model(spec, lattice)
    generator = np.random.default_rng(3)
    sigma0 = generator.choice(model.species.values, size=lattice.n_sites).astype(np.int8)
    engine = KMCEngine(model, sigma0, rebuild_interval)
    rng = RngStream.from_seed(42)
    for _ in range(300):
        if engine.total_rate() <= 0.0:
            break
        engine.fire(rng.uniform())
        assert engine.catalog.matches_full_enumeration()
    assert engine.total_rate() == pytest.approx(model.total_rate(engine.sigma))


def test_two_state_site_matches_closed_form():
    # 单格点，β=0：0→1 速率 c_a，1→0 速率 c_d
    c_a, c_d = 2.0, 1.0
    model = build_model(ising_spec(beta=0.0, h=0.0, c_a=c_a, c_d=c_d), Lattice((1,)))
    observable = Coverage(model.lattice, model.species)
    grid = np.array([0.25, 0.5, 1.0])
    n = 4000
    values = np.array([
        simulate_path(model, np.zeros(1, dtype=np.int8), 1.0, grid, observable,
                      RngStream.for_path(123, i)).values
        for i in range(n)
    ])
    expected = c_a / (c_a + c_d) * (1 - np.exp(-(c_a + c_d) * grid))
    se = np.sqrt(expected * (1 - expected) / n)
    assert np.all(np.abs(values.mean(axis=0) - expected) < 4 * se)


def test_pure_desorption_is_monotone():
    model = build_model(ising_spec(c_a=0.0), Lattice((20,)))
    grid = np.linspace(0.0, 5.0, 11)
    path = simulate_path(model, np.ones(20, dtype=np.int8), 5.0, grid,
                         Coverage(model.lattice, model.species), RngStream.from_seed(9),
                         record_events=True)
    assert path.values[0] == 1.0
    assert np.all(np.diff(path.values) <= 0)
    assert all(mechanism == "flip" for _, _, mechanism in path.events)
    assert path.final_state.sum() == round(path.values[-1] * 20)


def test_class_first_engine_agrees_with_direct_method():
    model = build_model(ising_spec(h=0.0), Lattice((10,)))
    observable = Coverage(model.lattice, model.species)
    sigma0 = np.zeros(10, dtype=np.int8)
    n = 1500

    def final_values(partition, seed):
        return np.array([
            simulate_path(model, sigma0, 1.0, [1.0], observable, RngStream.for_path(seed, i),
                          partition=partition).values[-1]
            for i in range(n)
        ])

    direct = final_values(None, 1)
    class_first = final_values(Partition.default(), 2)
    se = math.sqrt(direct.var(ddof=1) / n + class_first.var(ddof=1) / n)
    assert abs(direct.mean() - class_first.mean()) < 4 * se


def test_grid_recorder_takes_left_limit():
    recorder = GridRecorder([0.5, 1.0, 1.5])
    # 跳跃恰好发生在 t=1.0：记录跳跃前的值
    recorder.record_until(1.0, lambda: (7.0,))
    assert recorder.values[0].tolist() == [7.0, 7.0, 0.0]
    assert not recorder.done
    recorder.record_until(2.0, lambda: (9.0,))
    assert recorder.values[0].tolist() == [7.0, 7.0, 9.0]
    assert recorder.done


def test_simulate_path_rejects_bad_grid():
    model = build_model(ising_spec(), Lattice((4,)))
    observable = Coverage(model.lattice, model.species)
    with pytest.raises(ValueError):
        simulate_path(model, np.zeros(4, dtype=np.int8), 1.0, [0.0, 2.0], observable,
                      RngStream.from_seed(0))
    with pytest.raises(ValueError):
        simulate_path(model, np.zeros(4, dtype=np.int8), 1.0, [0.5, 0.2], observable,
                      RngStream.from_seed(0))


def test_rng_streams_are_reproducible():
    a = RngStream.for_path(7, 3)
    b = RngStream.for_path(7, 3)
    assert [a.uniform() for _ in range(5)] == [b.uniform() for _ in range(5)]
    assert RngStream.for_path(7, 4).uniform() != RngStream.for_path(7, 3).uniform()
    assert exponential_from_uniform(0.3, 0.0) == math.inf
    assert exponential_from_uniform(0.5, 2.0) == pytest.approx(math.log(2) / 2)


def test_sample_jump_frequency_and_waiting_time():
    # 场景：两个事件，速率 1 与 3（β=0 时脱附速率与邻居无关）
    model = build_model(ising_spec(beta=0.0, c_a=1.0, c_d=3.0), Lattice((2,)))
    catalog = EventCatalog(model, np.array([0, 1], dtype=np.int8))
    assert catalog.total_rate() == pytest.approx(4.0)
    rng = RngStream.from_seed(12)
    n = 20_000
    waits = np.empty(n)
    picks = np.empty(n, dtype=int)
    for i in range(n):
        waits[i], event = sample_jump(catalog, rng)
        picks[i] = event.site
    assert abs(np.mean(picks == 1) - 0.75) < 0.015
    assert abs(waits.mean() - 0.25) < 0.01
