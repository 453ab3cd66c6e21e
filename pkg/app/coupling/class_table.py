"""
按 (观测类 k, 格点胞 i) 组织的事件表 S_{k,i} 与聚合速率 λ_{k,i}

胞 C_i 是行优先编号下连续的 q 个格点，所以胞内速率和就是树状数组上的区间和
"""

import logging
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Set, Tuple

import numpy as np

from app.core.config import settings
from app.core.errors import ConfigError
from app.core.lattice import Event, dependency_shape, event_changes
from app.models.base import RateModel
from app.observables.observable import Observable
from app.observables.partition import Partition
from app.utils.fenwick import FenwickTree

logger = logging.getLogger(__name__)


class EventRecord(NamedTuple):
    event: Event
    rate: float
    k: int
    delta: float


class ClassTable:
    """一个过程的分类事件表；sigma 由本表持有并原地修改"""

    def __init__(self, model: RateModel, observable: Observable, partition: Partition,
                 sigma: np.ndarray, cell_size: Optional[int] = None,
                 rebuild_interval: Optional[int] = None):
        n = model.lattice.n_sites
        q = cell_size or n
        if q < 1 or n % q != 0:
            raise ConfigError(f"胞大小 q={q} 必须整除格点数 N={n}", section="coupling", key="q")
        self.model = model
        self.observable = observable
        self.partition = partition
        self.sigma = sigma
        self.n_sites = n
        self.q = q
        self.n_cells = n // q
        self.n_classes = partition.size
        self.rebuild_interval = rebuild_interval or settings.CATALOG_REBUILD_INTERVAL
        deps = dependency_shape(model.shape, observable.reads())
        self.dependents: List[List[int]] = model.lattice.neighbor_table(deps).tolist()
        self.records: List[List[EventRecord]] = []
        self.class_rates = np.zeros((self.n_classes, n))
        self.trees: List[FenwickTree] = []
        self._since_rebuild = 0
        self.rebuild()

    def _site_records(self, x: int) -> List[EventRecord]:
        sigma = self.sigma
        sites = self.model.neighbors[x]
        records = []
        for event, rate in self.model.site_events(x, sigma):
            d = self.observable.event_delta(sigma, event, sites)
            records.append(EventRecord(event, rate, self.partition.classify(d), d))
        return records

    def _class_sums(self, records: Sequence[EventRecord]) -> List[float]:
        sums = [0.0] * self.n_classes
        for rec in records:
            sums[rec.k] += rec.rate
        return sums

    def rebuild(self) -> None:
        self.records = [self._site_records(x) for x in range(self.n_sites)]
        rates = np.zeros((self.n_classes, self.n_sites))
        for x, records in enumerate(self.records):
            rates[:, x] = self._class_sums(records)
        self.class_rates = rates
        self.trees = [FenwickTree(rates[k]) for k in range(self.n_classes)]
        self._since_rebuild = 0

    def refresh(self, sites: Iterable[int]) -> None:
        for x in sites:
            records = self._site_records(x)
            self.records[x] = records
            for k, value in enumerate(self._class_sums(records)):
                if self.class_rates[k, x] != value:
                    self.class_rates[k, x] = value
                    self.trees[k].set(x, value)

    def affected_sites(self, touched: Iterable[int]) -> Set[int]:
        affected = set()
        for t in touched:
            affected.update(self.dependents[t])
        return affected

    def apply(self, event: Event) -> Set[int]:
        """执行事件并同步表格，返回重新枚举过的格点"""
        changes = event_changes(self.sigma, event, self.model.neighbors[event.site])
        for site, _, new in changes:
            self.sigma[site] = new
        self._since_rebuild += 1
        if self._since_rebuild >= self.rebuild_interval:
            logger.debug(f"分类事件表已累计 {self._since_rebuild} 次更新，从头重建")
            self.rebuild()
            return set(range(self.n_sites))
        affected = self.affected_sites(site for site, _, _ in changes)
        self.refresh(affected)
        return affected

    def cell_of(self, x: int) -> int:
        return x // self.q

    def cell_bounds(self, i: int) -> Tuple[int, int]:
        return i * self.q, (i + 1) * self.q

    def cell_rate(self, k: int, i: int) -> float:
        """λ_{k,i}"""
        lo, hi = self.cell_bounds(i)
        return max(self.trees[k].range_sum(lo, hi), 0.0)

    def class_rate(self, k: int) -> float:
        return max(self.trees[k].total(), 0.0)

    def total_rate(self) -> float:
        return sum(self.class_rate(k) for k in range(self.n_classes))

    def select(self, k: int, i: int, u: float) -> EventRecord:
        """在 S_{k,i} 内按 c/λ_{k,i} 选取事件，u ∈ [0, 1)"""
        lo, hi = self.cell_bounds(i)
        tree = self.trees[k]
        base = tree.prefix(lo)
        target = base + u * max(tree.prefix(hi) - base, 0.0)
        x = tree.find(target, lo, hi)
        remaining = target - tree.prefix(x)
        last = None
        for rec in self.records[x]:
            if rec.k != k:
                continue
            last = rec
            remaining -= rec.rate
            if remaining < 0.0:
                return rec
        return last

    def cell_records(self, k: int, i: int) -> List[EventRecord]:
        lo, hi = self.cell_bounds(i)
        return [rec for x in range(lo, hi) for rec in self.records[x] if rec.k == k]

    def snapshot(self) -> Dict[Tuple[int, int], Tuple[List[EventRecord], float]]:
        """{(k, i): (S_{k,i} 中的事件, λ_{k,i})}，用于与从头重建比较"""
        return {
            (k, i): (self.cell_records(k, i), self.cell_rate(k, i))
            for k in range(self.n_classes)
            for i in range(self.n_cells)
        }
