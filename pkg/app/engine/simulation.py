"""
单过程直接法 KMC
等待时间 ~ Exp(λ)，事件按 c/λ 选取；观测量在时间网格上取左极限
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from app.core.errors import LatticeError
from app.core.lattice import Event, event_changes
from app.engine.catalog import EventCatalog
from app.engine.rng import RngStream, exponential_from_uniform
from app.models.base import RateModel
from app.observables.observable import Observable
from app.observables.partition import Partition

logger = logging.getLogger(__name__)


@dataclass
class Trajectory:
    times: np.ndarray
    values: np.ndarray
    n_events: int = 0
    final_state: Optional[np.ndarray] = None  # 最后一个网格时刻的构型
    events: Optional[List[Tuple[float, int, str]]] = None


class GridRecorder:
    """
    把分段常数过程记录到时间网格上

    跳跃时刻恰好落在网格点上时记录跳跃前的值
    """

    def __init__(self, grid: Sequence[float], n_series: int = 1):
        self.grid = np.asarray(grid, dtype=float)
        self.values = np.zeros((n_series, len(self.grid)))
        self.index = 0

    @property
    def done(self) -> bool:
        return self.index >= len(self.grid)

    def record_until(self, t_next: float, current: Callable[[], Sequence[float]],
                     on_last: Optional[Callable[[], None]] = None) -> None:
        """记录所有不晚于 t_next 的网格点；current() 只在需要时调用一次"""
        grid = self.grid
        if self.index >= len(grid) or grid[self.index] > t_next:
            return
        snapshot = current()
        while self.index < len(grid) and grid[self.index] <= t_next:
            self.values[:, self.index] = snapshot
            self.index += 1
        if self.done and on_last is not None:
            on_last()


class KMCEngine:
    """一条路径的直接法模拟器，拥有自己的构型缓冲"""

    def __init__(self, model: RateModel, sigma0: np.ndarray, rebuild_interval: Optional[int] = None):
        if len(sigma0) != model.lattice.n_sites:
            raise LatticeError(f"初始构型长度 {len(sigma0)} 与格点数 {model.lattice.n_sites} 不符")
        self.model = model
        self.sigma = np.array(sigma0, dtype=np.int8, copy=True)
        self.catalog = EventCatalog(model, self.sigma, rebuild_interval)
        self.time = 0.0
        self.n_events = 0

    def total_rate(self) -> float:
        return self.catalog.total_rate()

    def waiting_time(self, u: float) -> float:
        return exponential_from_uniform(u, self.catalog.total_rate())

    def apply(self, event: Event) -> None:
        changes = event_changes(self.sigma, event, self.model.neighbors[event.site])
        for site, _, new in changes:
            self.sigma[site] = new
        self.catalog.notify([site for site, _, _ in changes])
        self.n_events += 1

    def fire(self, u: float) -> Event:
        event = self.catalog.select(u)
        self.apply(event)
        return event


class ClassFirstEngine:
    """
    两步选取：先按 λ_k/λ 选观测类 S_k，再在类内按 c/λ_k 选事件
    与直接法是同一个过程，用来交叉检验分类事件表
    """

    def __init__(self, model: RateModel, sigma0: np.ndarray, observable: Observable,
                 partition: Partition, rebuild_interval: Optional[int] = None):
        from app.coupling.class_table import ClassTable

        self.model = model
        self.sigma = np.array(sigma0, dtype=np.int8, copy=True)
        self.table = ClassTable(model, observable, partition, self.sigma,
                                rebuild_interval=rebuild_interval)
        self.time = 0.0
        self.n_events = 0

    def total_rate(self) -> float:
        return self.table.total_rate()

    def waiting_time(self, u: float) -> float:
        return exponential_from_uniform(u, self.total_rate())

    def fire(self, u: float) -> Event:
        rates = [self.table.class_rate(k) for k in range(self.table.n_classes)]
        target = u * sum(rates)
        k = 0
        for k, rate in enumerate(rates):
            if target < rate:
                break
            target -= rate
        while rates[k] <= 0.0:
            k -= 1
        record = self.table.select(k, 0, min(target / rates[k], math.nextafter(1.0, 0.0)))
        self.table.apply(record.event)
        self.n_events += 1
        return record.event


def sample_jump(catalog: EventCatalog, rng: RngStream) -> Tuple[float, Optional[Event]]:
    """
    抽取一次跳跃

    Returns:
        (等待时间, 事件)；总速率为 0 时返回 (inf, None)，调用方在时间上限处结束路径
    """
    total = catalog.total_rate()
    if total <= 0.0:
        return math.inf, None
    dt = exponential_from_uniform(rng.uniform(), total)
    return dt, catalog.select(rng.uniform())


def simulate_path(model: RateModel, sigma0: np.ndarray, T: float, grid: Sequence[float],
                  observable: Observable, rng: RngStream, record_events: bool = False,
                  partition: Optional[Partition] = None,
                  rebuild_interval: Optional[int] = None) -> Trajectory:
    """
    模拟一条路径到时间 T，并在网格上记录观测量

    Args:
        partition: 给出时使用两步（先选类）选取
    """
    grid = np.asarray(grid, dtype=float)
    if len(grid) and (grid[0] < 0 or grid[-1] > T or np.any(np.diff(grid) < 0)):
        raise ValueError(f"时间网格必须单调且位于 [0, {T}] 内")
    if partition is None:
        engine = KMCEngine(model, sigma0, rebuild_interval)
    else:
        engine = ClassFirstEngine(model, sigma0, observable, partition, rebuild_interval)
    recorder = GridRecorder(grid)
    trajectory = Trajectory(times=grid, values=recorder.values[0],
                            events=[] if record_events else None)

    def snapshot():
        trajectory.final_state = engine.sigma.copy()

    while True:
        t_next = engine.time + engine.waiting_time(rng.uniform())
        recorder.record_until(t_next, lambda: (observable.eval(engine.sigma),), snapshot)
        if t_next > T:
            break
        engine.time = t_next
        event = engine.fire(rng.uniform())
        if record_events:
            trajectory.events.append((t_next, event.site, event.mechanism))

    trajectory.n_events = engine.n_events
    return trajectory
