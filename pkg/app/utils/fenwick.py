"""
树状数组（Fenwick 树）
维护非负速率的前缀和，支持 O(log n) 的更新与按累计值查找
"""

from typing import Iterable

import numpy as np


class FenwickTree:
    """非负权重的前缀和树"""

    def __init__(self, values: Iterable[float]):
        self.values = np.array(list(values), dtype=float)
        self.size = len(self.values)
        self._tree = [0.0] * (self.size + 1)
        self.rebuild()

    def rebuild(self) -> None:
        """按当前权重从头重建，消除累计的浮点漂移"""
        tree = [0.0] * (self.size + 1)
        for i in range(self.size):
            tree[i + 1] += float(self.values[i])
            parent = (i + 1) + ((i + 1) & -(i + 1))
            if parent <= self.size:
                tree[parent] += tree[i + 1]
        self._tree = tree

    def set(self, index: int, value: float) -> None:
        delta = value - self.values[index]
        if delta == 0.0:
            return
        self.values[index] = value
        i = index + 1
        tree = self._tree
        while i <= self.size:
            tree[i] += delta
            i += i & -i

    def prefix(self, index: int) -> float:
        """前 index 个权重之和"""
        total = 0.0
        i = index
        tree = self._tree
        while i > 0:
            total += tree[i]
            i -= i & -i
        return total

    def range_sum(self, lo: int, hi: int) -> float:
        return self.prefix(hi) - self.prefix(lo)

    def total(self) -> float:
        return self.prefix(self.size)

    def find(self, target: float, lo: int = 0, hi: int = None) -> int:
        """
        返回累计和首次超过 target 的下标

        Args:
            target: 累计目标值
            lo, hi: 结果被限制在 [lo, hi) 内且权重为正，用于抵消舍入误差
        """
        if hi is None:
            hi = self.size
        pos = 0
        remaining = target
        step = 1 << self.size.bit_length()
        tree = self._tree
        while step:
            nxt = pos + step
            if nxt <= self.size and tree[nxt] <= remaining:
                pos = nxt
                remaining -= tree[nxt]
            step >>= 1
        index = min(max(pos, lo), hi - 1)
        if self.values[index] > 0.0:
            return index
        # 舍入落在零权重上时，取区间内最近的正权重
        for j in range(index, hi):
            if self.values[j] > 0.0:
                return j
        for j in range(index - 1, lo - 1, -1):
            if self.values[j] > 0.0:
                return j
        raise IndexError("区间内没有正权重")
