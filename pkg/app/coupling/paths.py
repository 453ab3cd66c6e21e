"""
按耦合方案生成一对路径 (σ_t, η_t)，并在网格上记录两条观测量序列
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from app.coupling.class_table import ClassTable
from app.coupling.coarse import CoarseCoupledState, coupled_step_coarse
from app.coupling.crn import CommonRandomStream, CRNProcess, crn_step
from app.coupling.micro import MicroCoupledState, coupled_step_micro
from app.coupling.schemes import CouplingScheme, SchemeKind
from app.coupling.state import CoupledState
from app.engine.rng import RngStream
from app.engine.simulation import GridRecorder, KMCEngine, simulate_path
from app.models.base import RateModel
from app.observables.observable import Observable
from app.observables.partition import Partition

logger = logging.getLogger(__name__)


@dataclass
class CoupledTrajectory:
    times: np.ndarray
    values_a: np.ndarray
    values_b: np.ndarray
    n_events: int
    final_a: Optional[np.ndarray] = None
    final_b: Optional[np.ndarray] = None

    @property
    def difference(self) -> np.ndarray:
        """f(σ_t) − f(η_t)"""
        return self.values_a - self.values_b


def build_coupled_state(scheme: CouplingScheme, model_a: RateModel, model_b: RateModel,
                        sigma0: np.ndarray, eta0: np.ndarray, observable: Observable,
                        partition: Partition, rebuild_interval: Optional[int] = None) -> CoupledState:
    """为微观或按类耦合方案构造耦合状态"""
    n = model_a.lattice.n_sites
    q = scheme.cell_size(n) if scheme.is_class_based else n
    table_a = ClassTable(model_a, observable, partition, np.array(sigma0, dtype=np.int8), q,
                         rebuild_interval)
    table_b = ClassTable(model_b, observable, partition, np.array(eta0, dtype=np.int8), q,
                         rebuild_interval)
    if scheme.is_micro:
        return MicroCoupledState(table_a, table_b, scheme.kind)
    if scheme.is_class_based:
        return CoarseCoupledState(table_a, table_b, scheme.within_class_selection)
    raise ValueError(f"{scheme.label} 没有耦合状态")


def _run_coupled_state(state: CoupledState, T: float, grid: np.ndarray,
                       observable: Observable, rng: RngStream) -> CoupledTrajectory:
    recorder = GridRecorder(grid, n_series=2)
    finals = {}

    def snapshot():
        finals["a"] = state.sigma.copy()
        finals["b"] = state.eta.copy()

    def current():
        return observable.eval(state.sigma), observable.eval(state.eta)

    def before_jump(t_next):
        recorder.record_until(t_next, current, snapshot)

    step = coupled_step_micro if isinstance(state, MicroCoupledState) else coupled_step_coarse
    while True:
        _, branch = step(state, rng, T, before_jump)
        if branch is None:
            break

    return CoupledTrajectory(grid, recorder.values[0], recorder.values[1], state.n_events,
                             finals.get("a"), finals.get("b"))


def _run_crn(model_a: RateModel, model_b: RateModel, sigma0: np.ndarray, eta0: np.ndarray,
             T: float, grid: np.ndarray, observable: Observable, rng: RngStream,
             rebuild_interval: Optional[int]) -> CoupledTrajectory:
    stream = CommonRandomStream(rng)
    process_a = CRNProcess(KMCEngine(model_a, sigma0, rebuild_interval), observable, grid, T)
    process_b = CRNProcess(KMCEngine(model_b, eta0, rebuild_interval), observable, grid, T)
    while not crn_step(process_a, process_b, stream):
        pass
    return CoupledTrajectory(
        grid, process_a.recorder.values[0], process_b.recorder.values[0],
        process_a.engine.n_events + process_b.engine.n_events,
        process_a.final_state, process_b.final_state,
    )


def simulate_coupled_path(scheme: CouplingScheme, model_a: RateModel, model_b: RateModel,
                          sigma0: np.ndarray, eta0: np.ndarray, T: float, grid: Sequence[float],
                          observable: Observable, partition: Partition, rng: RngStream,
                          rebuild_interval: Optional[int] = None) -> CoupledTrajectory:
    """
    生成一对耦合路径

    Args:
        model_a: 参数 θ 下的速率规则（驱动 σ）
        model_b: 参数 θ+ε 下的速率规则（驱动 η）
        rng: 本路径独占的随机数流；非耦合方案从中派生两条独立子流
    """
    grid = np.asarray(grid, dtype=float)
    if scheme.kind == SchemeKind.UNCOUPLED:
        stream_a, stream_b = rng.spawn(2)
        path_a = simulate_path(model_a, sigma0, T, grid, observable, stream_a,
                               rebuild_interval=rebuild_interval)
        path_b = simulate_path(model_b, eta0, T, grid, observable, stream_b,
                               rebuild_interval=rebuild_interval)
        return CoupledTrajectory(grid, path_a.values, path_b.values,
                                 path_a.n_events + path_b.n_events,
                                 path_a.final_state, path_b.final_state)
    if scheme.kind == SchemeKind.CRN:
        return _run_crn(model_a, model_b, sigma0, eta0, T, grid, observable, rng, rebuild_interval)
    state = build_coupled_state(scheme, model_a, model_b, sigma0, eta0, observable, partition,
                                rebuild_interval)
    return _run_coupled_state(state, T, grid, observable, rng)
