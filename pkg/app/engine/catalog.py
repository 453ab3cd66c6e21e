"""
单过程事件目录
按格点存放事件与速率，格点总速率挂在树状数组上；
事件发生后只重新枚举受影响格点，每 K 个事件从头重建一次
"""

import logging
from typing import Iterable, List, Optional, Sequence, Set

import numpy as np

from app.core.config import settings
from app.core.lattice import Event, Offset, dependency_shape
from app.models.base import RatedEvent, RateModel
from app.utils.fenwick import FenwickTree

logger = logging.getLogger(__name__)


class EventCatalog:
    """与构型 sigma 同步的事件目录；sigma 由调用方持有并原地修改"""

    def __init__(self, model: RateModel, sigma: np.ndarray,
                 rebuild_interval: Optional[int] = None, reads: Iterable[Offset] = ()):
        self.model = model
        self.sigma = sigma
        self.rebuild_interval = rebuild_interval or settings.CATALOG_REBUILD_INTERVAL
        deps = dependency_shape(model.shape, reads)
        self.dependents: List[List[int]] = model.lattice.neighbor_table(deps).tolist()
        self.site_events: List[List[RatedEvent]] = []
        self.tree: FenwickTree = FenwickTree([])
        self._since_rebuild = 0
        self.rebuild()

    def rebuild(self) -> None:
        n = self.model.lattice.n_sites
        self.site_events = [self.model.site_events(x, self.sigma) for x in range(n)]
        self.tree = FenwickTree(sum(r for _, r in events) for events in self.site_events)
        self._since_rebuild = 0

    def total_rate(self) -> float:
        return max(self.tree.total(), 0.0)

    def affected_sites(self, touched: Iterable[int]) -> Set[int]:
        affected = set()
        for t in touched:
            affected.update(self.dependents[t])
        return affected

    def refresh(self, sites: Iterable[int]) -> None:
        for x in sites:
            events = self.model.site_events(x, self.sigma)
            self.site_events[x] = events
            self.tree.set(x, sum(r for _, r in events))

    def notify(self, touched: Sequence[int]) -> None:
        """sigma 在 touched 上被修改后调用"""
        self._since_rebuild += 1
        if self._since_rebuild >= self.rebuild_interval:
            logger.debug(f"事件目录已累计 {self._since_rebuild} 次更新，从头重建")
            self.rebuild()
            return
        self.refresh(self.affected_sites(touched))

    def select(self, u: float) -> Event:
        """按速率比例选取事件，u ∈ [0, 1)"""
        target = u * self.total_rate()
        x = self.tree.find(target)
        remaining = target - self.tree.prefix(x)
        events = self.site_events[x]
        for event, rate in events:
            remaining -= rate
            if remaining < 0.0:
                return event
        return events[-1][0]

    def events(self) -> List[RatedEvent]:
        return [item for events in self.site_events for item in events]

    def matches_full_enumeration(self) -> bool:
        """增量维护的目录与从头枚举完全一致"""
        return self.site_events == [
            self.model.site_events(x, self.sigma) for x in range(self.model.lattice.n_sites)
        ]
