"""
ZGB CO 氧化模型（2 维五点邻域）
物种：−1 = CO，0 = 空位，1 = O
"""

from typing import List

import numpy as np

from app.core.lattice import CO_OXIDATION, VON_NEUMANN_2D, Event, Lattice, NeighborhoodShape
from app.models.base import RatedEvent, RateModel
from app.schemas.parameters import ParameterVector
from app.core.errors import ParameterError

CO = -1
VACANT = 0
O = 1

CO_ADSORPTION = "co_adsorption"
O2_ADSORPTION = "o2_adsorption"
REACTION = "reaction"

AXIS_SLOTS = (1, 2, 3, 4)


def zgb_events(x: int, sigma: np.ndarray, theta: ParameterVector,
               neighbors: List[int]) -> List[RatedEvent]:
    """
    格点 x 的全部 ZGB 事件（成对事件包含全部朝向）

    Args:
        neighbors: x 的五点有序邻域（自身、右、上、左、下）
    """
    local = [int(sigma[s]) for s in neighbors]
    events = []
    center = local[0]
    if center == VACANT:
        if theta.c_a > 0:
            omega = (CO,) + tuple(local[1:])
            events.append((Event(x, omega, CO_ADSORPTION), theta.c_a))
        if theta.c_a < 1:
            for slot in AXIS_SLOTS:
                if local[slot] == VACANT:
                    omega = list(local)
                    omega[0] = O
                    omega[slot] = O
                    events.append((Event(x, tuple(omega), f"{O2_ADSORPTION}:{slot}"), 1 - theta.c_a))
    elif theta.c_r > 0:
        for slot in AXIS_SLOTS:
            if local[slot] == -center:
                omega = list(local)
                omega[0] = VACANT
                omega[slot] = VACANT
                events.append((Event(x, tuple(omega), f"{REACTION}:{slot}"), theta.c_r))
    return events


class ZGBModel(RateModel):
    rule = "zgb"
    species = CO_OXIDATION

    def __init__(self, lattice: Lattice, parameters: ParameterVector):
        if parameters.c_a is not None and parameters.c_a > 1:
            raise ParameterError(f"ZGB 的 c_a 必须在 [0, 1] 内: {parameters.c_a}")
        super().__init__(lattice, parameters)

    @classmethod
    def neighborhood(cls, lattice: Lattice) -> NeighborhoodShape:
        return VON_NEUMANN_2D

    def pair_partner(self, event: Event) -> int:
        if ":" not in event.mechanism:
            return -1
        slot = int(event.mechanism.split(":")[1])
        return self.neighbors[event.site][slot]

    def oriented_events(self, x: int, sigma: np.ndarray) -> List[RatedEvent]:
        return zgb_events(x, sigma, self.parameters, self.neighbors[x])
