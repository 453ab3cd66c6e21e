"""
带 CO 扩散与脱附的 CO 氧化模型（17 点邻域）

邻域槽位（0 起）：0 为自身；1,3,5,7 为轴向最近邻；2,4,6,8 为对角最近邻；9..16 为外圈。
O₂ 吸附到 x 与对角格点 x_i 上，要求 x、x_i 以及 D_i 中的格点全部为空；
每个锚点 x 各自计入这一事件，速率只取决于 x 的邻域
"""

from typing import Dict, List, Tuple

import numpy as np

from app.core.errors import ParameterError
from app.core.lattice import CO_OXIDATION, EVANS_17, Event, Lattice, NeighborhoodShape
from app.models.base import RatedEvent, RateModel
from app.models.zgb import CO, CO_ADSORPTION, O2_ADSORPTION, REACTION, VACANT, O
from app.schemas.parameters import ParameterVector

CO_DIFFUSION = "co_diffusion"
CO_DESORPTION = "co_desorption"

AXIS_SLOTS = (1, 3, 5, 7)

# 对角槽位 -> 与之相邻的四个格点槽位（自身以外）
DIAGONAL_BLOCKERS: Dict[int, Tuple[int, ...]] = {
    2: (1, 3, 10, 11),
    4: (3, 5, 12, 13),
    6: (5, 7, 14, 15),
    8: (7, 1, 16, 9),
}


def evans_events(x: int, sigma: np.ndarray, theta: ParameterVector,
                 neighbors: List[int]) -> List[RatedEvent]:
    """格点 x 的全部事件（成对事件包含全部朝向）"""
    local = [int(sigma[s]) for s in neighbors]
    events = []
    center = local[0]

    def write(updates: Dict[int, int]) -> Tuple[int, ...]:
        omega = list(local)
        for slot, value in updates.items():
            omega[slot] = value
        return tuple(omega)

    if center == VACANT:
        if theta.c_a > 0:
            events.append((Event(x, write({0: CO}), CO_ADSORPTION), theta.c_a))
        if theta.c_a < 1:
            for slot, blockers in DIAGONAL_BLOCKERS.items():
                if local[slot] == VACANT and all(local[j] == VACANT for j in blockers):
                    events.append((Event(x, write({0: O, slot: O}), f"{O2_ADSORPTION}:{slot}"),
                                   1 - theta.c_a))
        return events

    if center == CO:
        if theta.c_diff > 0:
            for slot in AXIS_SLOTS:
                if local[slot] == VACANT:
                    events.append((Event(x, write({0: VACANT, slot: CO}), f"{CO_DIFFUSION}:{slot}"),
                                   theta.c_diff))
        if theta.c_d > 0:
            events.append((Event(x, write({0: VACANT}), CO_DESORPTION), theta.c_d))

    if theta.c_r > 0:
        for slot in AXIS_SLOTS:
            if local[slot] == -center:
                events.append((Event(x, write({0: VACANT, slot: VACANT}), f"{REACTION}:{slot}"),
                               theta.c_r))
    return events


class EvansModel(RateModel):
    rule = "evans_co"
    species = CO_OXIDATION

    def __init__(self, lattice: Lattice, parameters: ParameterVector):
        if parameters.c_a is not None and parameters.c_a > 1:
            raise ParameterError(f"c_a 必须在 [0, 1] 内: {parameters.c_a}")
        super().__init__(lattice, parameters)

    @classmethod
    def neighborhood(cls, lattice: Lattice) -> NeighborhoodShape:
        return EVANS_17

    def pair_partner(self, event: Event) -> int:
        # 扩散与 O₂ 吸附按锚点计入（各自检查自己的 D_i）；反应是无序对
        if event.mechanism.startswith(REACTION):
            slot = int(event.mechanism.split(":")[1])
            return self.neighbors[event.site][slot]
        return -1

    def oriented_events(self, x: int, sigma: np.ndarray) -> List[RatedEvent]:
        return evans_events(x, sigma, self.parameters, self.neighbors[x])
