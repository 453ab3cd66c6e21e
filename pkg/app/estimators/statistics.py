"""
可流式合并的均值/方差统计
单个分片内按路径下标顺序做 Welford 更新，分片之间用成对合并公式
"""

import math
from dataclasses import dataclass
from typing import Iterable, List, Sequence

import numpy as np

from app.schemas.estimator_result import EstimatorResult


class RunningStats:
    """一个分片的累加器；按 add 的顺序逐条更新"""

    def __init__(self, scheme: str, times: Sequence[float], step: float = 1.0):
        self.scheme = scheme
        self.times = np.asarray(times, dtype=float)
        self.step = step
        size = len(self.times)
        self.n = 0
        self.mean = np.zeros(size)
        self.m2 = np.zeros(size)
        self.mean_a = np.zeros(size)
        self.m2_a = np.zeros(size)
        self.mean_b = np.zeros(size)
        self.m2_b = np.zeros(size)
        self.n_events = 0

    @staticmethod
    def _update(mean: np.ndarray, m2: np.ndarray, x: np.ndarray, n: int) -> None:
        delta = x - mean
        mean += delta / n
        m2 += delta * (x - mean)

    def add(self, values_a: np.ndarray, values_b: np.ndarray, n_events: int = 0) -> None:
        values_a = np.asarray(values_a, dtype=float)
        values_b = np.asarray(values_b, dtype=float)
        self.n += 1
        self._update(self.mean, self.m2, values_a - values_b, self.n)
        self._update(self.mean_a, self.m2_a, values_a, self.n)
        self._update(self.mean_b, self.m2_b, values_b, self.n)
        self.n_events += n_events

    def result(self, start: int, stop: int) -> EstimatorResult:
        return EstimatorResult(
            scheme=self.scheme,
            times=self.times.tolist(),
            mean_diff=self.mean.tolist(),
            m2=self.m2.tolist(),
            mean_a=self.mean_a.tolist(),
            mean_b=self.mean_b.tolist(),
            m2_a=self.m2_a.tolist(),
            m2_b=self.m2_b.tolist(),
            n_samples=self.n,
            step=self.step,
            seed_ranges=[(start, stop)] if self.n else [],
            n_events=self.n_events,
        )


def _overlaps(a: Sequence, b: Sequence) -> bool:
    for lo_a, hi_a in a:
        for lo_b, hi_b in b:
            if lo_a < hi_b and lo_b < hi_a:
                return True
    return False


def merge(left: EstimatorResult, right: EstimatorResult) -> EstimatorResult:
    """
    合并两个分片（成对合并公式）

    Raises:
        ValueError: 网格不同或路径下标区间重叠
    """
    if left.times != right.times:
        raise ValueError("只能合并相同时间网格上的结果")
    if _overlaps(left.seed_ranges, right.seed_ranges):
        raise ValueError(f"路径下标区间重叠: {left.seed_ranges} 与 {right.seed_ranges}")
    if right.n_samples == 0:
        return left.model_copy(update={"seed_ranges": left.seed_ranges + right.seed_ranges})
    if left.n_samples == 0:
        return right.model_copy(update={"seed_ranges": left.seed_ranges + right.seed_ranges})

    n_a, n_b = left.n_samples, right.n_samples
    n = n_a + n_b

    def combine(mean_l, m2_l, mean_r, m2_r):
        mean_l, mean_r = np.asarray(mean_l), np.asarray(mean_r)
        delta = mean_r - mean_l
        mean = mean_l + delta * (n_b / n)
        m2 = np.asarray(m2_l) + np.asarray(m2_r) + delta ** 2 * (n_a * n_b / n)
        return mean.tolist(), m2.tolist()

    mean_diff, m2 = combine(left.mean_diff, left.m2, right.mean_diff, right.m2)
    mean_a, m2_a = combine(left.mean_a, left.m2_a, right.mean_a, right.m2_a)
    mean_b, m2_b = combine(left.mean_b, left.m2_b, right.mean_b, right.m2_b)
    return EstimatorResult(
        scheme=left.scheme,
        times=left.times,
        mean_diff=mean_diff,
        m2=m2,
        mean_a=mean_a,
        mean_b=mean_b,
        m2_a=m2_a,
        m2_b=m2_b,
        n_samples=n,
        step=left.step,
        seed_ranges=sorted(left.seed_ranges + right.seed_ranges),
        n_events=left.n_events + right.n_events,
        confidence=left.confidence,
    )


def merge_all(partials: Iterable[EstimatorResult]) -> EstimatorResult:
    partials = list(partials)
    if not partials:
        raise ValueError("没有可合并的结果")
    merged = partials[0]
    for partial in partials[1:]:
        merged = merge(merged, partial)
    return merged


@dataclass
class VarianceRatio:
    times: np.ndarray
    ratios: np.ndarray
    summary: float


def variance_ratio(result_a: EstimatorResult, result_b: EstimatorResult) -> VarianceRatio:
    """
    逐网格点的方差比 Var_a / Var_b；汇总值为网格后半段的平均

    两者方差都为 0 的网格点不计入汇总
    """
    if result_a.times != result_b.times:
        raise ValueError("只能比较相同时间网格上的结果")
    var_a = result_a.variance
    var_b = result_b.variance
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(var_b > 0, var_a / np.where(var_b > 0, var_b, 1.0),
                          np.where(var_a > 0, np.inf, np.nan))
    half = ratios[len(ratios) // 2:]
    finite = half[np.isfinite(half)]
    summary = float(np.mean(finite)) if finite.size else math.nan
    return VarianceRatio(np.asarray(result_a.times), ratios, summary)


def summary_variance(result: EstimatorResult) -> float:
    """网格后半段方差的平均"""
    variance = result.variance
    return float(np.mean(variance[len(variance) // 2:]))
