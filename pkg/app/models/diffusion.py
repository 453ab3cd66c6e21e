"""
吸附/脱附 + 扩散模型
翻转部分与 Ising 模型相同，另有粒子以常数 c_diff 跳到空的轴向邻居
"""

from typing import List

import numpy as np

from app.core.lattice import Event, Lattice
from app.models.base import RatedEvent
from app.models.ising import IsingAdsorptionModel
from app.schemas.parameters import ParameterVector

HOP = "hop"


def diffusion_rate(x: int, y: int, sigma: np.ndarray, theta: ParameterVector,
                   lattice: Lattice) -> float:
    """粒子从 x 跳到 y 的速率：周期距离为 1、x 占据、y 为空时为 c_diff"""
    if lattice.distance(x, y) != 1:
        return 0.0
    if sigma[x] == 1 and sigma[y] == 0:
        return theta.c_diff
    return 0.0


class AdsorptionDiffusionModel(IsingAdsorptionModel):
    rule = "ad_diffusion"

    def oriented_events(self, x: int, sigma: np.ndarray) -> List[RatedEvent]:
        _, local = self._local(x, sigma)
        events = []
        event, rate = self.flip_event(x, local)
        if rate > 0:
            events.append((event, rate))
        c_diff = self.parameters.c_diff
        if local[0] == 1 and c_diff > 0:
            # 交换只能从占据位发起，每个 (x, y) 对只有一个朝向
            for slot in range(1, self.shape.k):
                if local[slot] == 0:
                    omega = list(local)
                    omega[0] = 0
                    omega[slot] = 1
                    events.append((Event(x, tuple(omega), f"{HOP}:{slot}"), c_diff))
        return events
