"""
Ising 型吸附/脱附模型
空位以 c_a 吸附；占据位以 c_d·exp(−β(J·Σ邻居 − h)) 脱附
"""

import math
from typing import List

import numpy as np

from app.core.lattice import BINARY, Event, Lattice, NeighborhoodShape, axis_shape
from app.models.base import RatedEvent, RateModel
from app.schemas.parameters import ParameterVector

FLIP = "flip"


def ising_rate(x: int, sigma: np.ndarray, theta: ParameterVector, neighbors: List[int]) -> float:
    """
    格点 x 的翻转速率

    Args:
        neighbors: x 的轴向邻居槽位（不含自身），N=2 时两个槽位指向同一格点也分别计数
    """
    if sigma[x] == 0:
        return theta.c_a
    occupied = sum(int(sigma[y]) for y in neighbors)
    return theta.c_d * math.exp(-theta.beta * (theta.J * occupied - theta.h))


class IsingAdsorptionModel(RateModel):
    """单格点翻转的吸附/脱附"""

    rule = "ising_ad"
    species = BINARY

    def __init__(self, lattice: Lattice, parameters: ParameterVector):
        super().__init__(lattice, parameters)
        # 脱附速率只依赖占据邻居数，预先算好
        slots = self.shape.k - 1
        self._desorption = [
            parameters.c_d * math.exp(-parameters.beta * (parameters.J * m - parameters.h))
            for m in range(slots + 1)
        ]

    @classmethod
    def neighborhood(cls, lattice: Lattice) -> NeighborhoodShape:
        return axis_shape(lattice.dimension)

    def flip_rate(self, local: List[int]) -> float:
        if local[0] == 0:
            return self.parameters.c_a
        return self._desorption[sum(local[1:])]

    def flip_event(self, x: int, local: List[int]) -> RatedEvent:
        omega = (1 - local[0],) + tuple(local[1:])
        return Event(x, omega, FLIP), self.flip_rate(local)

    def oriented_events(self, x: int, sigma: np.ndarray) -> List[RatedEvent]:
        _, local = self._local(x, sigma)
        event, rate = self.flip_event(x, local)
        return [(event, rate)] if rate > 0 else []
