"""
速率规则模型抽象层
每个模型给出格点 x 上的可达事件 Ω_x(σ) 及其速率 c(x,ω;σ)
"""

from abc import ABC, abstractmethod
from typing import ClassVar, List, Tuple

import numpy as np

from app.core.errors import LatticeError, ParameterError
from app.core.lattice import Event, Lattice, NeighborhoodShape, SpeciesSet
from app.schemas.parameters import RULE_PARAMETERS, ModelSpec, ParameterVector

RatedEvent = Tuple[Event, float]


class RateModel(ABC):
    """速率规则抽象基类"""

    rule: ClassVar[str]
    species: ClassVar[SpeciesSet]

    def __init__(self, lattice: Lattice, parameters: ParameterVector):
        missing = [p for p in RULE_PARAMETERS[self.rule] if getattr(parameters, p) is None]
        if missing:
            raise ParameterError(f"规则 {self.rule} 缺少参数: {', '.join(missing)}")
        self.lattice = lattice
        self.parameters = parameters
        self.shape = self.neighborhood(lattice)
        if self.shape.dimension != lattice.dimension:
            raise LatticeError(f"规则 {self.rule} 不支持 {lattice.dimension} 维格点")
        # 行表示各格点的有序邻域，转成 list 以便在热循环中快速索引
        self.neighbors: List[List[int]] = lattice.neighbor_table(self.shape).tolist()

    @classmethod
    @abstractmethod
    def neighborhood(cls, lattice: Lattice) -> NeighborhoodShape:
        """该规则在给定格点上使用的邻域形状"""
        pass

    @abstractmethod
    def oriented_events(self, x: int, sigma: np.ndarray) -> List[RatedEvent]:
        """格点 x 上的全部事件（成对事件两个朝向都包含）"""
        pass

    @property
    def spec(self) -> ModelSpec:
        return ModelSpec(rule=self.rule, parameters=self.parameters)

    def site_events(self, x: int, sigma: np.ndarray) -> List[RatedEvent]:
        """
        以 x 为锚点计入目录的事件

        成对事件只从下标较小的一端计入，保证每个无序对只出现一次
        """
        return [(e, r) for e, r in self.oriented_events(x, sigma) if self._owns(e)]

    def pair_partner(self, event: Event) -> int:
        """成对事件的另一端格点；单格点事件返回 -1"""
        return -1

    def _owns(self, event: Event) -> bool:
        partner = self.pair_partner(event)
        return partner < 0 or event.site < partner

    def enumerate_events(self, sigma: np.ndarray) -> List[RatedEvent]:
        events = []
        for x in range(self.lattice.n_sites):
            events.extend(self.site_events(x, sigma))
        return events

    def total_rate(self, sigma: np.ndarray) -> float:
        return float(sum(r for _, r in self.enumerate_events(sigma)))

    def with_parameters(self, parameters: ParameterVector) -> "RateModel":
        return type(self)(self.lattice, parameters)

    def _local(self, x: int, sigma: np.ndarray) -> Tuple[List[int], List[int]]:
        sites = self.neighbors[x]
        return sites, [int(sigma[s]) for s in sites]
