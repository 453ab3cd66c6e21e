import math

import numpy as np
import pytest
from pydantic import ValidationError

from app.core.errors import ParameterError
from app.core.lattice import EVANS_17, Lattice, apply_update
from app.models import build_model, enumerate_events
from app.models.diffusion import HOP, diffusion_rate
from app.models.evans import CO_DESORPTION, CO_DIFFUSION, evans_events
from app.models.ising import FLIP, ising_rate
from app.models.zgb import CO, CO_ADSORPTION, O, O2_ADSORPTION, REACTION, zgb_events
from app.schemas.parameters import ModelSpec, ParameterVector, PerturbationDirection, perturb
from conftest import diffusion_spec, ising_spec


def zgb_spec(c_a=0.5, c_r=1.0) -> ModelSpec:
    return ModelSpec(rule="zgb", parameters=ParameterVector(c_a=c_a, c_r=c_r))


def evans_spec(c_a=0.5, c_d=0.1, c_r=1.0, c_diff=2.0) -> ModelSpec:
    return ModelSpec(rule="evans_co", parameters=ParameterVector(c_a=c_a, c_d=c_d, c_r=c_r, c_diff=c_diff))


def test_ising_all_vacant_events():
    events = enumerate_events(ising_spec(c_a=0.7), Lattice((3,)), np.zeros(3, dtype=np.int8))
    assert len(events) == 3
    assert all(rate == 0.7 and event.mechanism == FLIP for event, rate in events)


def test_ising_rate_values():
    theta = ParameterVector(beta=1, J=1, h=1, c_a=0.3, c_d=1)
    assert ising_rate(1, np.array([0, 0, 0]), theta, [0, 2]) == 0.3
    # 两个邻居为空：c_d·e^{+1}
    assert ising_rate(1, np.array([0, 1, 0]), theta, [0, 2]) == pytest.approx(math.e)
    # 两个邻居占据：c_d·e^{−1}
    assert ising_rate(1, np.array([1, 1, 1]), theta, [0, 2]) == pytest.approx(math.exp(-1))


def test_ising_model_matches_rate_function():
    lattice = Lattice((7,))
    spec = ising_spec(beta=0.8, J=1.3, h=-0.2, c_a=0.4, c_d=1.7)
    model = build_model(spec, lattice)
    sigma = np.array([1, 1, 0, 1, 0, 0, 1], dtype=np.int8)
    for event, rate in model.enumerate_events(sigma):
        x = event.site
        neighbors = [(x - 1) % 7, (x + 1) % 7]
        assert rate == pytest.approx(ising_rate(x, sigma, spec.parameters, neighbors))


def test_ising_total_rate_on_two_sites():
    # N=2 时两个邻居槽位都指向另一个格点，且都计数
    model = build_model(ising_spec(), Lattice((2,)))
    assert model.total_rate(np.array([1, 0], dtype=np.int8)) == pytest.approx(1 + math.e)


def test_diffusion_events_on_two_sites():
    model = build_model(diffusion_spec(beta=1, J=1, h=1, c_diff=0.5), Lattice((2,)))
    events = model.enumerate_events(np.array([1, 0], dtype=np.int8))
    flips = [(e, r) for e, r in events if e.mechanism == FLIP]
    hops = [(e, r) for e, r in events if e.mechanism.startswith(HOP)]
    assert len(flips) == 2
    assert len(hops) == 2
    assert all(r == 0.5 and e.site == 0 for e, r in hops)


def test_diffusion_rate_function():
    lattice = Lattice((5,))
    theta = ParameterVector(beta=0, J=0, h=0, c_a=1, c_d=1, c_diff=2.5)
    sigma = np.array([1, 0, 0, 1, 1])
    assert diffusion_rate(0, 1, sigma, theta, lattice) == 2.5
    assert diffusion_rate(0, 4, sigma, theta, lattice) == 0.0
    assert diffusion_rate(0, 2, sigma, theta, lattice) == 0.0
    assert diffusion_rate(3, 4, sigma, theta, lattice) == 0.0


def test_diffusion_hop_conserves_particles():
    lattice = Lattice((6,))
    model = build_model(diffusion_spec(), lattice)
    sigma = np.array([1, 0, 1, 1, 0, 0], dtype=np.int8)
    for event, _ in model.enumerate_events(sigma):
        if event.mechanism.startswith(HOP):
            assert apply_update(sigma, event, lattice, model.shape).sum() == sigma.sum()


def test_zgb_vacant_neighborhood():
    lattice = Lattice((4, 4))
    model = build_model(zgb_spec(c_a=0.3), lattice)
    events = zgb_events(5, np.zeros(16, dtype=np.int8), model.parameters, model.neighbors[5])
    co = [r for e, r in events if e.mechanism == CO_ADSORPTION]
    o2 = [r for e, r in events if e.mechanism.startswith(O2_ADSORPTION)]
    assert co == [0.3]
    assert o2 == pytest.approx([0.7] * 4)


def test_zgb_reaction_and_blocked_site():
    lattice = Lattice((4, 4))
    model = build_model(zgb_spec(c_r=2.0), lattice)
    sigma = np.zeros(16, dtype=np.int8)
    x = 5
    sigma[x] = CO
    sigma[model.neighbors[x][1]] = O
    events = zgb_events(x, sigma, model.parameters, model.neighbors[x])
    assert [(e.mechanism, r) for e, r in events] == [(f"{REACTION}:1", 2.0)]

    full = np.full(16, O, dtype=np.int8)
    assert zgb_events(x, full, model.parameters, model.neighbors[x]) == []


def test_zgb_pairs_counted_once():
    lattice = Lattice((4, 4))
    model = build_model(zgb_spec(c_a=0.25), lattice)
    events = model.enumerate_events(np.zeros(16, dtype=np.int8))
    o2 = [e for e, _ in events if e.mechanism.startswith(O2_ADSORPTION)]
    # 16 个格点 × 2 条键，每条键一次
    assert len(o2) == 32
    assert len({frozenset((e.site, model.pair_partner(e))) for e in o2}) == 32


def test_zgb_rejects_adsorption_fraction_above_one():
    with pytest.raises(ParameterError):
        build_model(zgb_spec(c_a=1.5), Lattice((4, 4)))


def test_evans_events():
    lattice = Lattice((5, 5))
    model = build_model(evans_spec(), lattice)
    x = lattice.site((2, 2))
    sigma = np.zeros(25, dtype=np.int8)
    events = evans_events(x, sigma, model.parameters, model.neighbors[x])
    o2 = [e for e, _ in events if e.mechanism.startswith(O2_ADSORPTION)]
    assert len(o2) == 4
    slot3 = [e for e in o2 if e.mechanism == f"{O2_ADSORPTION}:2"][0]
    assert slot3.omega[0] == O and slot3.omega[2] == O

    # 阻挡格点被占据时该对角方向不可吸附
    sigma[model.neighbors[x][1]] = CO
    events = evans_events(x, sigma, model.parameters, model.neighbors[x])
    mechanisms = {e.mechanism for e, _ in events}
    assert f"{O2_ADSORPTION}:2" not in mechanisms
    assert f"{O2_ADSORPTION}:8" not in mechanisms
    assert f"{O2_ADSORPTION}:4" in mechanisms

    sigma = np.zeros(25, dtype=np.int8)
    sigma[x] = CO
    events = evans_events(x, sigma, model.parameters, model.neighbors[x])
    rates = {e.mechanism: r for e, r in events}
    assert rates[CO_DESORPTION] == 0.1
    assert rates[f"{CO_DIFFUSION}:1"] == 2.0
    assert len([m for m in rates if m.startswith(CO_DIFFUSION)]) == 4


def test_evans_uses_seventeen_site_shape():
    model = build_model(evans_spec(), Lattice((5, 5)))
    assert model.shape == EVANS_17
    assert all(len(row) == 17 for row in model.neighbors)


def test_model_requires_parameters():
    with pytest.raises(ValidationError):
        ModelSpec(rule="ising_ad", parameters=ParameterVector(beta=1, J=1, h=1, c_a=1))
    with pytest.raises(ValidationError):
        ParameterVector(beta=1, c_a=-1.0)


def test_perturbation():
    theta = ParameterVector(beta=1, J=1, h=1, c_a=1, c_d=1)
    assert perturb(theta, PerturbationDirection(parameter="beta", step=0.1)).beta == pytest.approx(1.1)
    theta = ParameterVector(beta=0.1, J=1, h=0, c_a=1, c_d=1, c_diff=1)
    assert perturb(theta, PerturbationDirection(parameter="beta", step=1e-3)).beta == pytest.approx(0.101)
    with pytest.raises(ValidationError):
        PerturbationDirection(parameter="beta", step=0)
    with pytest.raises(ValidationError):
        PerturbationDirection(parameter="gamma", step=0.1)
    with pytest.raises(ValidationError):
        # c_a − 2 < 0
        perturb(theta, PerturbationDirection(parameter="c_a", step=-2))
    with pytest.raises(ParameterError):
        perturb(ParameterVector(c_a=0.5, c_r=1), PerturbationDirection(parameter="beta", step=0.1))


def test_unknown_rule():
    with pytest.raises(ValidationError):
        ModelSpec(rule="potts", parameters=ParameterVector())


@pytest.mark.parametrize("spec", [zgb_spec(), evans_spec()], ids=["zgb", "evans_co"])
def test_total_rate_is_translation_invariant(spec):
    lattice = Lattice((6, 6))
    model = build_model(spec, lattice)
    # 场景：单个 O 在 (3,3)，以及一个随机三态构型
    single = np.zeros((6, 6), dtype=np.int8)
    single[3, 3] = O
    mixed = np.random.default_rng(8).choice([CO, 0, 0, 0, O], size=(6, 6)).astype(np.int8)
    for grid in (single, mixed):
        expected = model.total_rate(grid.ravel())
        for axis in (0, 1):
            for shift in range(1, 6):
                shifted = np.roll(grid, shift, axis=axis).ravel()
                assert model.total_rate(shifted) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("rule", ["ising_ad", "ad_diffusion"])
def test_rate_constant_rescaling_scales_every_rate(rule):
    # 场景：c_a、c_d（及 c_diff）同乘 s，所有事件速率同乘 s，相当于时间尺度变换
    lattice = Lattice((8,))
    sigma = np.array([1, 1, 0, 1, 0, 0, 1, 0], dtype=np.int8)
    base = diffusion_spec(beta=0.7, J=1.2, h=0.3, c_a=0.4, c_d=1.1, c_diff=0.6)
    scale = 2.5
    scaled = {"c_a": 0.4 * scale, "c_d": 1.1 * scale, "c_diff": 0.6 * scale}
    if rule == "ising_ad":
        base = ising_spec(beta=0.7, J=1.2, h=0.3, c_a=0.4, c_d=1.1)
        del scaled["c_diff"]
    fast = base.with_parameters(base.parameters.model_copy(update=scaled))
    events = enumerate_events(base, lattice, sigma)
    fast_events = enumerate_events(fast, lattice, sigma)
    assert [e for e, _ in fast_events] == [e for e, _ in events]
    for (_, rate), (_, fast_rate) in zip(events, fast_events):
        assert fast_rate == pytest.approx(scale * rate)


@pytest.mark.parametrize("spec, values, dims", [
    (ising_spec(), (0, 1), (10,)),
    (diffusion_spec(), (0, 1), (10,)),
    (zgb_spec(), (CO, 0, O), (5, 5)),
    (evans_spec(), (CO, 0, O), (5, 5)),
], ids=["ising_ad", "ad_diffusion", "zgb", "evans_co"])
def test_enumerate_events_leaves_configuration_untouched(spec, values, dims):
    lattice = Lattice(dims)
    sigma = np.random.default_rng(4).choice(values, size=lattice.n_sites).astype(np.int8)
    before = sigma.copy()
    events = enumerate_events(spec, lattice, sigma)
    assert events
    assert np.array_equal(sigma, before)
