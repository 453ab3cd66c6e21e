"""
方差诊断泛函 F[c;f] 与耦合速率的可行性检查

F = Σ 耦合事件对的 c·Δf_σ·Δf_η，越大说明差分估计量的方差越小。
全部用 Fraction 精确计算，比较不依赖求和顺序
"""

from abc import ABC, abstractmethod
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from app.core.errors import InfeasibleCoupling
from app.core.lattice import Event, event_changes
from app.coupling.micro import micro_rate_c0, micro_rate_c1, pair_records
from app.models.base import RateModel
from app.observables.observable import Observable
from app.observables.partition import Partition

ZERO = Fraction(0)


class ExactRecord(NamedTuple):
    event: Event
    rate: Fraction
    k: int
    delta: Fraction


@dataclass
class StatePair:
    """一对构型 (σ, η) 在两组参数下的全部事件（按格点分组，精确数值）"""

    records_a: List[List[ExactRecord]]
    records_b: List[List[ExactRecord]]

    @property
    def n_sites(self) -> int:
        return len(self.records_a)


def exact_records(model: RateModel, observable: Observable, partition: Partition,
                  sigma: np.ndarray) -> List[List[ExactRecord]]:
    result = []
    for x in range(model.lattice.n_sites):
        sites = model.neighbors[x]
        records = []
        for event, rate in model.site_events(x, sigma):
            changes = event_changes(sigma, event, sites)
            records.append(ExactRecord(event, Fraction(rate),
                                       partition.classify(observable.delta(sigma, changes)),
                                       observable.exact_delta(sigma, changes)))
        result.append(records)
    return result


def build_state_pair(model_a: RateModel, model_b: RateModel, observable: Observable,
                     partition: Partition, sigma: np.ndarray, eta: np.ndarray) -> StatePair:
    return StatePair(exact_records(model_a, observable, partition, sigma),
                     exact_records(model_b, observable, partition, eta))


@dataclass
class MarginalSums:
    """每个 σ 事件的行和 Σ_{y,ω'} c 与每个 η 事件的列和"""

    rows: List[Tuple[ExactRecord, Fraction]]
    columns: List[Tuple[ExactRecord, Fraction]]


class CouplingRates(ABC):
    """耦合速率 c(x,y,ω,ω') 的访问接口"""

    name: str = ""

    @abstractmethod
    def functional(self, pair: StatePair) -> Fraction:
        pass

    @abstractmethod
    def marginal_sums(self, pair: StatePair) -> MarginalSums:
        pass


class ZeroCoupling(CouplingRates):
    name = "zero"

    def functional(self, pair: StatePair) -> Fraction:
        return ZERO

    def marginal_sums(self, pair: StatePair) -> MarginalSums:
        return MarginalSums(
            rows=[(r, ZERO) for records in pair.records_a for r in records],
            columns=[(r, ZERO) for records in pair.records_b for r in records],
        )


class MicroCoupling(CouplingRates):
    """
    c₀（optimized=False）或 c₁（optimized=True）：同格点同机制配对

    c₁ 只配对同一增量类的事件；二值覆盖度下其 F 与 CoarseCoupling(1) 相同
    """

    def __init__(self, optimized: bool):
        self.optimized = optimized
        self.name = "micro_opt" if optimized else "micro_unopt"
        self._rate = micro_rate_c1 if optimized else micro_rate_c0

    def joint(self, rec_a: Optional[ExactRecord], rec_b: Optional[ExactRecord]) -> Fraction:
        return Fraction(self._rate(rec_a, rec_b))

    def _pairs(self, pair: StatePair):
        for x in range(pair.n_sites):
            for rec_a, rec_b in pair_records(pair.records_a[x], pair.records_b[x]):
                yield rec_a, rec_b, self.joint(rec_a, rec_b)

    def functional(self, pair: StatePair) -> Fraction:
        return sum((c * a.delta * b.delta for a, b, c in self._pairs(pair) if c), ZERO)

    def marginal_sums(self, pair: StatePair) -> MarginalSums:
        rows, columns = [], []
        for rec_a, rec_b, c in self._pairs(pair):
            if rec_a is not None:
                rows.append((rec_a, c))
            if rec_b is not None:
                columns.append((rec_b, c))
        return MarginalSums(rows, columns)


class CoarseCoupling(CouplingRates):
    """
    c_q：(x,ω) ∈ S_{k,i}(σ)、(y,ω') ∈ S_{k,i}(η) 时
    c = min{λ^A_{k,i}, λ^B_{k,i}} · (c_A/λ^A_{k,i}) · (c_B/λ^B_{k,i})
    """

    def __init__(self, q: int):
        self.q = q
        self.name = f"coarse_q{q}"

    def _cells(self, records: List[List[ExactRecord]]) -> Dict[Tuple[int, int], List[ExactRecord]]:
        cells = defaultdict(list)
        for x, site_records in enumerate(records):
            for rec in site_records:
                cells[(rec.k, x // self.q)].append(rec)
        return cells

    def _check(self, pair: StatePair) -> None:
        if pair.n_sites % self.q != 0:
            raise ValueError(f"q={self.q} 必须整除格点数 N={pair.n_sites}")

    def functional(self, pair: StatePair) -> Fraction:
        self._check(pair)
        cells_a = self._cells(pair.records_a)
        cells_b = self._cells(pair.records_b)
        total = ZERO
        for key, recs_a in cells_a.items():
            recs_b = cells_b.get(key)
            if not recs_b:
                continue
            lam_a = sum((r.rate for r in recs_a), ZERO)
            lam_b = sum((r.rate for r in recs_b), ZERO)
            mean_a = sum((r.rate * r.delta for r in recs_a), ZERO) / lam_a
            mean_b = sum((r.rate * r.delta for r in recs_b), ZERO) / lam_b
            total += min(lam_a, lam_b) * mean_a * mean_b
        return total

    def marginal_sums(self, pair: StatePair) -> MarginalSums:
        self._check(pair)
        cells_a = self._cells(pair.records_a)
        cells_b = self._cells(pair.records_b)
        rows, columns = [], []
        for cells, other, out in ((cells_a, cells_b, rows), (cells_b, cells_a, columns)):
            for key, recs in cells.items():
                lam = sum((r.rate for r in recs), ZERO)
                lam_other = sum((r.rate for r in other.get(key, ())), ZERO)
                m = min(lam, lam_other)
                for r in recs:
                    # 对方集合的 c/λ 之和为 1（对方集合为空时 m = 0）
                    out.append((r, m * r.rate / lam if m else ZERO))
        return MarginalSums(rows, columns)


def macro_coupling(n_sites: int) -> CoarseCoupling:
    coupling = CoarseCoupling(n_sites)
    coupling.name = "macro"
    return coupling


@dataclass
class FeasibilityReport:
    passed: bool
    checked: int
    violation: Optional[str] = None


def feasibility_check(coupling: CouplingRates, pair: StatePair) -> FeasibilityReport:
    """
    检查每个 σ 事件 0 ≤ Σ_{y,ω'} c ≤ c_A(x,ω;σ)，以及每个 η 事件的对称约束；
    报告第一个违反的约束
    """
    sums = coupling.marginal_sums(pair)
    checked = 0
    bounds = (("σ", "行和", "c_A", sums.rows), ("η", "列和", "c_B", sums.columns))
    for label, sum_name, bound_name, items in bounds:
        for rec, total in items:
            checked += 1
            where = f"{label} 事件 (site={rec.event.site}, {rec.event.mechanism})"
            if total < 0:
                return FeasibilityReport(False, checked, f"{where}: {sum_name} {float(total)!r} < 0")
            if total > rec.rate:
                return FeasibilityReport(
                    False, checked,
                    f"{where}: {sum_name} {float(total)!r} > {bound_name} = {float(rec.rate)!r}")
    return FeasibilityReport(True, checked)


def functional_F(coupling: CouplingRates, pair: StatePair, check: bool = True) -> Fraction:
    """F[c;f]；check 为 True 时先做可行性检查，不可行则抛出 InfeasibleCoupling"""
    if check:
        report = feasibility_check(coupling, pair)
        if not report.passed:
            raise InfeasibleCoupling(f"{coupling.name} 不可行: {report.violation}")
    return coupling.functional(pair)
