"""
粗粒化耦合 c_q（q = N 即宏观耦合 c_N，q = 1 即 micro_opt 的 c₁）

对每个 (类 k, 胞 i) 三步选取：
联合分支速率 min{λ^A_{k,i}, λ^B_{k,i}}，残差分支归较大的一方；
分支确定后再在 S_{k,i}(σ)、S_{k,i}(η) 内按 c/λ 选具体事件
"""

import logging
import math
from typing import Callable, Iterable, Optional, Set, Tuple

import numpy as np

from app.coupling.class_table import ClassTable
from app.coupling.schemes import JointSelection
from app.coupling.state import Branch, CoupledBranch, CoupledState, check_branch_rates
from app.engine.rng import RngStream
from app.utils.fenwick import FenwickTree

logger = logging.getLogger(__name__)


class CoarseCoupledState(CoupledState):
    def __init__(self, table_a: ClassTable, table_b: ClassTable,
                 selection: JointSelection = JointSelection.COMMON):
        super().__init__(table_a, table_b)
        if table_a.q != table_b.q or table_a.n_classes != table_b.n_classes:
            raise ValueError("两个过程的胞大小与类数必须一致")
        self.selection = selection
        self.n_classes = table_a.n_classes
        self.n_cells = table_a.n_cells
        self.lam_a = np.zeros((self.n_classes, self.n_cells))
        self.lam_b = np.zeros((self.n_classes, self.n_cells))
        self.tree = FenwickTree([0.0] * (self.n_classes * self.n_cells))
        self._refresh_cells(range(self.n_cells))
        self.rebuild_interval = table_a.rebuild_interval

    def _refresh_cells(self, cells: Iterable[int]) -> None:
        for i in cells:
            for k in range(self.n_classes):
                a = self.table_a.cell_rate(k, i)
                b = self.table_b.cell_rate(k, i)
                check_branch_rates(min(a, b), a, b, f"类 {k} 胞 {i}")
                self.lam_a[k, i] = a
                self.lam_b[k, i] = b
                self.tree.set(k * self.n_cells + i, max(a, b))

    def total_rate(self) -> float:
        """Σ_{k,i} (λ^A + λ^B − min) = Σ_{k,i} max(λ^A, λ^B)"""
        return max(self.tree.total(), 0.0)

    def fire(self, rng: RngStream) -> CoupledBranch:
        target = rng.uniform() * self.total_rate()
        flat = self.tree.find(target)
        k, i = divmod(flat, self.n_cells)
        remaining = target - self.tree.prefix(flat)
        a = self.lam_a[k, i]
        b = self.lam_b[k, i]
        joint = min(a, b)

        if remaining < joint or a == b:
            u_a = rng.uniform()
            u_b = u_a if self.selection == JointSelection.COMMON else rng.uniform()
            chosen = CoupledBranch(Branch.JOINT,
                                   self.table_a.select(k, i, u_a).event,
                                   self.table_b.select(k, i, u_b).event)
        elif a > b:
            chosen = CoupledBranch(Branch.A_ONLY, self.table_a.select(k, i, rng.uniform()).event, None)
        else:
            chosen = CoupledBranch(Branch.B_ONLY, None, self.table_b.select(k, i, rng.uniform()).event)

        affected: Set[int] = set()
        if chosen.event_a is not None:
            affected |= self.table_a.apply(chosen.event_a)
        if chosen.event_b is not None:
            affected |= self.table_b.apply(chosen.event_b)
        self._refresh_cells({self.table_a.cell_of(x) for x in affected})
        self.n_events += 1
        if self.n_events % self.rebuild_interval == 0:
            self.tree.rebuild()
        return chosen


def coupled_step_coarse(state: CoarseCoupledState, rng: RngStream, horizon: float = math.inf,
                        before_jump: Optional[Callable[[float], None]] = None
                        ) -> Tuple[float, Optional[CoupledBranch]]:
    """一步按类耦合（micro_opt、coarse、macro）：(等待时间, 分支)；不执行时分支为 None"""
    if not isinstance(state, CoarseCoupledState):
        raise TypeError(f"需要 CoarseCoupledState，得到 {type(state).__name__}")
    return state.step(rng, horizon, before_jump)
