"""
生成元矩阵 Q：Q[s′, s] = c(s → s′)，对角元 = −λ(s)
概率向量满足 dP/dt = Q P，观测量满足 du/dt = Qᵀ u
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import sparse

from app.core.errors import InvariantViolation
from app.core.lattice import event_changes
from app.models.base import RateModel
from app.oracle.state_space import StateSpace

logger = logging.getLogger(__name__)


@dataclass
class GeneratorMatrix:
    matrix: sparse.csc_matrix
    space: StateSpace

    @property
    def n_states(self) -> int:
        return self.matrix.shape[0]

    @property
    def exit_rates(self) -> np.ndarray:
        """λ(s)"""
        return -self.matrix.diagonal()

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


def build_generator(model: RateModel, space: Optional[StateSpace] = None,
                    max_states: Optional[int] = None) -> GeneratorMatrix:
    """
    枚举每个状态的全部事件并累加到目标状态

    Raises:
        StateSpaceTooLarge: 状态数超出预算
    """
    space = space or StateSpace(model.lattice, model.species, max_states)
    rows, cols, data = [], [], []
    for s, sigma in enumerate(space.states):
        exit_rate = 0.0
        for event, rate in model.enumerate_events(sigma):
            changes = event_changes(sigma, event, model.neighbors[event.site])
            # 不改变构型的事件对过程没有影响
            if rate <= 0.0 or not changes:
                continue
            target = sigma.copy()
            for site, _, new in changes:
                target[site] = new
            rows.append(space.index(target))
            cols.append(s)
            data.append(rate)
            exit_rate += rate
        rows.append(s)
        cols.append(s)
        data.append(-exit_rate)
    n = len(space)
    # 重复坐标在转换时求和
    matrix = sparse.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsc()
    generator = GeneratorMatrix(matrix, space)
    check_generator(generator)
    logger.debug(f"{model.rule}: 生成元 {n}×{n}, 非零元 {matrix.nnz}")
    return generator


def check_generator(generator: GeneratorMatrix, tol: float = 1e-9) -> None:
    """非对角元非负，各列和为 0"""
    coo = generator.matrix.tocoo()
    off = coo.row != coo.col
    if np.any(coo.data[off] < 0):
        raise InvariantViolation("生成元存在负的非对角元")
    if np.any(generator.exit_rates < -tol):
        raise InvariantViolation("生成元存在正的对角元")
    column_sums = np.asarray(generator.matrix.sum(axis=0)).ravel()
    scale = max(1.0, float(np.max(np.abs(coo.data))) if coo.nnz else 1.0)
    worst = float(np.max(np.abs(column_sums))) if column_sums.size else 0.0
    if worst > tol * scale:
        raise InvariantViolation(f"生成元列和不为 0（最大偏差 {worst!r}）")
