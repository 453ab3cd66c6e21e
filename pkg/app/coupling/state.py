"""
耦合状态 (σ, η) 的公共部分：分支描述、指数时钟、分支速率检查
"""

import math
from abc import ABC, abstractmethod
from enum import Enum
from typing import Callable, NamedTuple, Optional, Tuple

import numpy as np

from app.core.errors import InvariantViolation
from app.core.lattice import Event
from app.coupling.class_table import ClassTable
from app.engine.rng import RngStream, exponential_from_uniform


class Branch(str, Enum):
    JOINT = "joint"
    A_ONLY = "A_only"
    B_ONLY = "B_only"  # 只移动 η


class CoupledBranch(NamedTuple):
    branch: Branch
    event_a: Optional[Event]
    event_b: Optional[Event]


def check_branch_rates(joint: float, rate_a: float, rate_b: float, where: str) -> Tuple[float, float]:
    """返回两个残差分支速率；出现负值说明联合速率超过了 min 约束"""
    residual_a = rate_a - joint
    residual_b = rate_b - joint
    if joint < 0.0 or residual_a < 0.0 or residual_b < 0.0:
        raise InvariantViolation(
            f"{where} 的分支速率为负: joint={joint!r}, A 残差={residual_a!r}, B 残差={residual_b!r}")
    return residual_a, residual_b


class CoupledState(ABC):
    """一对一起演化的构型；两个分类事件表分别持有 σ 与 η"""

    def __init__(self, table_a: ClassTable, table_b: ClassTable):
        if table_a.n_sites != table_b.n_sites:
            raise ValueError("两个过程的格点数必须相同")
        self.table_a = table_a
        self.table_b = table_b
        self.time = 0.0
        self.n_events = 0

    @property
    def sigma(self) -> np.ndarray:
        return self.table_a.sigma

    @property
    def eta(self) -> np.ndarray:
        return self.table_b.sigma

    @abstractmethod
    def total_rate(self) -> float:
        pass

    @abstractmethod
    def fire(self, rng: RngStream) -> CoupledBranch:
        """按分支速率选一个分支并执行"""
        pass

    def waiting_time(self, u: float) -> float:
        return exponential_from_uniform(u, self.total_rate())

    def step(self, rng: RngStream, horizon: float = math.inf,
             before_jump: Optional[Callable[[float], None]] = None) -> Tuple[float, Optional[CoupledBranch]]:
        """
        抽等待时间并执行一个分支

        before_jump 在执行前以跳跃时刻调用（此时构型仍是跳跃前的）；
        跳跃时刻晚于 horizon 或总速率为 0 时不执行，分支为 None
        """
        dt = self.waiting_time(rng.uniform())
        t_next = self.time + dt
        if before_jump is not None:
            before_jump(t_next)
        if t_next > horizon or math.isinf(dt):
            return dt, None
        self.time = t_next
        return dt, self.fire(rng)
