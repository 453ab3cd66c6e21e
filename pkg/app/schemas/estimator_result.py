from typing import Any, Dict, List, Tuple

import numpy as np
from pydantic import BaseModel, Field
from scipy.stats import norm

from app.core.config import settings

CSV_COLUMNS = ["time", "mean_diff", "derivative", "variance", "ci_halfwidth", "n_samples"]


class EstimatorResult(BaseModel):
    """
    有限差分估计量的网格统计

    mean_diff 为 f(σ_t) − f(η_t) 的样本均值，m2 为离差平方和（用于流式合并）；
    mean_a、mean_b 分别是 u^θ 与 u^{θ+ε} 的估计，m2_a、m2_b 是它们的离差平方和
    """

    scheme: str = Field(..., description="耦合方案标签")
    times: List[float] = Field(..., description="时间网格")
    mean_diff: List[float]
    m2: List[float]
    mean_a: List[float]
    mean_b: List[float]
    m2_a: List[float]
    m2_b: List[float]
    n_samples: int = Field(0, ge=0)
    step: float = Field(1.0, description="差分步长 h")
    seed_ranges: List[Tuple[int, int]] = Field(default_factory=list, description="已包含的路径下标区间 [start, stop)")
    n_events: int = Field(0, ge=0, description="全部路径的事件（分支）总数")
    confidence: float = Field(default_factory=lambda: settings.CONFIDENCE_LEVEL)

    @classmethod
    def empty(cls, scheme: str, times, step: float = 1.0) -> "EstimatorResult":
        zeros = [0.0] * len(times)
        return cls(scheme=scheme, times=list(map(float, times)), mean_diff=zeros, m2=list(zeros),
                   mean_a=list(zeros), mean_b=list(zeros), m2_a=list(zeros), m2_b=list(zeros),
                   step=step)

    @property
    def variance(self) -> np.ndarray:
        """差值的无偏样本方差"""
        if self.n_samples < 2:
            return np.zeros(len(self.times))
        return np.maximum(np.asarray(self.m2) / (self.n_samples - 1), 0.0)

    def _marginal_se(self, m2) -> np.ndarray:
        if self.n_samples < 2:
            return np.zeros(len(self.times))
        return np.sqrt(np.maximum(np.asarray(m2), 0.0) / (self.n_samples - 1) / self.n_samples)

    @property
    def standard_error_a(self) -> np.ndarray:
        """mean_a 的标准误"""
        return self._marginal_se(self.m2_a)

    @property
    def standard_error_b(self) -> np.ndarray:
        return self._marginal_se(self.m2_b)

    @property
    def derivative(self) -> np.ndarray:
        """D̄/h = (ū^θ − ū^{θ+ε})/h，与 exact_fd / h 同号"""
        return np.asarray(self.mean_diff) / self.step

    @property
    def standard_error(self) -> np.ndarray:
        if self.n_samples == 0:
            return np.zeros(len(self.times))
        return np.sqrt(self.variance / self.n_samples)

    @property
    def ci_halfwidth(self) -> np.ndarray:
        z = norm.ppf(0.5 + self.confidence / 2)
        return z * self.standard_error

    def to_rows(self) -> Dict[str, Any]:
        return {
            "time": np.asarray(self.times),
            "mean_diff": np.asarray(self.mean_diff),
            "derivative": self.derivative,
            "variance": self.variance,
            "ci_halfwidth": self.ci_halfwidth,
            "n_samples": np.full(len(self.times), self.n_samples, dtype=np.int64),
        }
