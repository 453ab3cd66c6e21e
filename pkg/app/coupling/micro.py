"""
微观耦合：同一格点、同一机制的事件配对（c₀ 与平凡耦合）

每个格点上每个机制有三个分支：联合 c、只动 σ 的 c_A − c、只动 η 的 c_B − c；
c ≡ 0 时就是平凡耦合（两个独立过程共用一个时钟）。
c₁ 只在增量类相同时配对，模拟时等同于 q = 1 的按类耦合，见 coarse.py
"""

import logging
import math
from typing import Callable, Dict, List, Optional, Set, Tuple

from app.coupling.class_table import ClassTable, EventRecord
from app.coupling.schemes import SchemeKind
from app.coupling.state import Branch, CoupledBranch, CoupledState, check_branch_rates
from app.engine.rng import RngStream
from app.utils.fenwick import FenwickTree

logger = logging.getLogger(__name__)

SitePair = Tuple[Optional[EventRecord], Optional[EventRecord], float]


def micro_rate_c0(rec_a: Optional[EventRecord], rec_b: Optional[EventRecord]) -> float:
    """min{c_A, c_B}；任一方没有该事件时为 0"""
    if rec_a is None or rec_b is None:
        return 0.0
    return min(rec_a.rate, rec_b.rate)


def micro_rate_c1(rec_a: Optional[EventRecord], rec_b: Optional[EventRecord]) -> float:
    """两事件的观测量增量落在同一类时取 min{c_A, c_B}，否则为 0"""
    if rec_a is None or rec_b is None or rec_a.k != rec_b.k:
        return 0.0
    return min(rec_a.rate, rec_b.rate)


def zero_rate(rec_a: Optional[EventRecord], rec_b: Optional[EventRecord]) -> float:
    return 0.0


JOINT_RATES: Dict[SchemeKind, Callable[[Optional[EventRecord], Optional[EventRecord]], float]] = {
    SchemeKind.TRIVIAL: zero_rate,
    SchemeKind.MICRO_UNOPT: micro_rate_c0,
}


def pair_records(records_a: List[EventRecord], records_b: List[EventRecord]
                 ) -> List[Tuple[Optional[EventRecord], Optional[EventRecord]]]:
    """按机制标签配对同一格点上两个过程的事件，顺序固定"""
    by_label_b = {rec.event.mechanism: rec for rec in records_b}
    pairs = []
    for rec_a in records_a:
        pairs.append((rec_a, by_label_b.pop(rec_a.event.mechanism, None)))
    for rec_b in records_b:
        if rec_b.event.mechanism in by_label_b:
            pairs.append((None, rec_b))
    return pairs


class MicroCoupledState(CoupledState):
    def __init__(self, table_a: ClassTable, table_b: ClassTable, kind: SchemeKind):
        super().__init__(table_a, table_b)
        if kind not in JOINT_RATES:
            raise ValueError(f"{kind.value} 不是微观耦合方案")
        self.kind = kind
        self.joint_rate = JOINT_RATES[kind]
        n = table_a.n_sites
        self.site_pairs: List[List[SitePair]] = [[] for _ in range(n)]
        totals = [self._refresh_site(x) for x in range(n)]
        self.tree = FenwickTree(totals)
        self.rebuild_interval = table_a.rebuild_interval

    def _refresh_site(self, x: int) -> float:
        pairs = []
        total = 0.0
        for rec_a, rec_b in pair_records(self.table_a.records[x], self.table_b.records[x]):
            joint = self.joint_rate(rec_a, rec_b)
            residual_a, residual_b = check_branch_rates(
                joint, rec_a.rate if rec_a else 0.0, rec_b.rate if rec_b else 0.0, f"格点 {x}")
            pairs.append((rec_a, rec_b, joint))
            total += joint + residual_a + residual_b
        self.site_pairs[x] = pairs
        return total

    def total_rate(self) -> float:
        return max(self.tree.total(), 0.0)

    def _select(self, u: float) -> CoupledBranch:
        target = u * self.total_rate()
        x = self.tree.find(target)
        remaining = target - self.tree.prefix(x)
        last = None
        for rec_a, rec_b, joint in self.site_pairs[x]:
            rate_a = rec_a.rate if rec_a else 0.0
            rate_b = rec_b.rate if rec_b else 0.0
            for branch, rate in ((Branch.JOINT, joint), (Branch.A_ONLY, rate_a - joint),
                                 (Branch.B_ONLY, rate_b - joint)):
                if rate <= 0.0:
                    continue
                last = CoupledBranch(
                    branch,
                    rec_a.event if branch != Branch.B_ONLY else None,
                    rec_b.event if branch != Branch.A_ONLY else None,
                )
                remaining -= rate
                if remaining < 0.0:
                    return last
        return last

    def fire(self, rng: RngStream) -> CoupledBranch:
        chosen = self._select(rng.uniform())
        affected: Set[int] = set()
        if chosen.event_a is not None:
            affected |= self.table_a.apply(chosen.event_a)
        if chosen.event_b is not None:
            affected |= self.table_b.apply(chosen.event_b)
        for x in affected:
            self.tree.set(x, self._refresh_site(x))
        self.n_events += 1
        if self.n_events % self.rebuild_interval == 0:
            self.tree.rebuild()
        return chosen


def coupled_step_micro(state: MicroCoupledState, rng: RngStream, horizon: float = math.inf,
                       before_jump: Optional[Callable[[float], None]] = None
                       ) -> Tuple[float, Optional[CoupledBranch]]:
    """一步按 (格点, 机制) 配对的耦合：(等待时间, 分支)；不执行时分支为 None"""
    if not isinstance(state, MicroCoupledState):
        raise TypeError(f"需要 MicroCoupledState，得到 {type(state).__name__}")
    return state.step(rng, horizon, before_jump)
