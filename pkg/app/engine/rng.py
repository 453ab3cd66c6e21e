"""
确定性随机数流
路径 i 的种子为 SeedSequence(master_seed, spawn_key=(i,))，与 worker 数无关
"""

import math
from typing import List, Tuple

import numpy as np


class RngStream:
    """封装 numpy Generator，只暴露模拟需要的均匀数"""

    def __init__(self, seed_sequence: np.random.SeedSequence):
        self.seed_sequence = seed_sequence
        self._generator = np.random.Generator(np.random.PCG64(seed_sequence))

    @classmethod
    def for_path(cls, master_seed: int, path_index: int) -> "RngStream":
        return cls(np.random.SeedSequence(master_seed, spawn_key=(path_index,)))

    @classmethod
    def from_seed(cls, seed: int) -> "RngStream":
        return cls(np.random.SeedSequence(seed))

    def spawn(self, n: int) -> List["RngStream"]:
        """派生 n 条互相独立的子流（不消耗本流的随机数）"""
        return [RngStream(child) for child in self.seed_sequence.spawn(n)]

    def uniform(self) -> float:
        """[0, 1) 上的均匀数"""
        return float(self._generator.random())

    def uniform_pair(self) -> Tuple[float, float]:
        return self.uniform(), self.uniform()

    @property
    def generator(self) -> np.random.Generator:
        return self._generator


def exponential_from_uniform(u: float, rate: float) -> float:
    """用均匀数 u ∈ [0,1) 做逆变换得到 Exp(rate) 等待时间；rate 为 0 时返回 inf"""
    if rate <= 0.0:
        return math.inf
    return -math.log1p(-u) / rate
