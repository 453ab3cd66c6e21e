"""
公共随机数（CRN）耦合

两个过程交替推进（先 σ 跳一步，再 η 跳一步）；第 n 次跳跃都使用共享流中的
第 n 对均匀数（等待时间、事件选取），所以 ε = 0 时两条路径逐步相同
"""

from collections import deque
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from app.engine.rng import RngStream
from app.engine.simulation import GridRecorder, KMCEngine
from app.observables.observable import Observable


class CommonRandomStream:
    """按跳跃序号缓存均匀数对，两个过程都取过之后即丢弃"""

    def __init__(self, rng: RngStream):
        self.rng = rng
        self._buffer = deque()
        self._offset = 0

    def pair(self, n: int) -> Tuple[float, float]:
        while n >= self._offset + len(self._buffer):
            self._buffer.append(self.rng.uniform_pair())
        return self._buffer[n - self._offset]

    def release(self, n: int) -> None:
        """丢弃序号小于 n 的均匀数对"""
        while self._offset < n and self._buffer:
            self._buffer.popleft()
            self._offset += 1


class CRNProcess:
    """CRN 耦合中的一个过程：引擎 + 网格记录 + 已用掉的跳跃序号"""

    def __init__(self, engine: KMCEngine, observable: Observable, grid: Sequence[float], T: float):
        self.engine = engine
        self.observable = observable
        self.recorder = GridRecorder(grid)
        self.T = T
        self.jumps = 0
        self.finished = False
        self.final_state: Optional[np.ndarray] = None

    def _snapshot(self) -> None:
        self.final_state = self.engine.sigma.copy()

    def advance(self, stream: CommonRandomStream) -> None:
        if self.finished:
            return
        u_time, u_select = stream.pair(self.jumps)
        self.jumps += 1
        engine = self.engine
        t_next = engine.time + engine.waiting_time(u_time)
        self.recorder.record_until(t_next, lambda: (self.observable.eval(engine.sigma),),
                                   self._snapshot)
        if t_next > self.T:
            self.finished = True
            return
        engine.time = t_next
        engine.fire(u_select)


def crn_step(process_a: CRNProcess, process_b: CRNProcess, stream: CommonRandomStream) -> bool:
    """两个过程各推进一次跳跃；返回两者是否都已越过时间上限"""
    process_a.advance(stream)
    process_b.advance(stream)
    pending = [p.jumps for p in (process_a, process_b) if not p.finished]
    if pending:
        stream.release(min(pending))
    return not pending
