"""
小系统的完整状态空间枚举
状态 s 的下标是构型按物种序号写成的 |Σ| 进制数，格点 0 为最高位
"""

import itertools
import logging
from collections import Counter
from typing import Optional

import numpy as np

from app.core.config import settings
from app.core.errors import LatticeError, StateSpaceTooLarge
from app.core.lattice import Lattice, SpeciesSet
from app.observables.observable import Observable

logger = logging.getLogger(__name__)


class StateSpace:

    def __init__(self, lattice: Lattice, species: SpeciesSet, max_states: Optional[int] = None):
        budget = max_states or settings.ORACLE_MAX_STATES
        base = len(species.values)
        size = base ** lattice.n_sites
        if size > budget:
            raise StateSpaceTooLarge(
                f"状态空间 {base}^{lattice.n_sites} = {size} 超出精确解预算 {budget}",
                section="lattice", key="dims")
        self.lattice = lattice
        self.species = species
        self.base = base
        self.values = np.array(sorted(species.values), dtype=np.int8)
        self._digit = {int(v): i for i, v in enumerate(self.values)}
        self.states = np.array(list(itertools.product(self.values, repeat=lattice.n_sites)),
                               dtype=np.int8).reshape(size, lattice.n_sites)
        self._weights = base ** np.arange(lattice.n_sites - 1, -1, -1, dtype=np.int64)
        logger.debug(f"枚举状态空间: {size} 个构型")

    def __len__(self) -> int:
        return len(self.states)

    def index(self, sigma) -> int:
        sigma = np.asarray(sigma)
        if sigma.shape != (self.lattice.n_sites,):
            raise LatticeError(f"构型长度 {sigma.size} 与格点数 {self.lattice.n_sites} 不符")
        try:
            digits = np.array([self._digit[int(v)] for v in sigma], dtype=np.int64)
        except KeyError as e:
            raise LatticeError(f"构型包含物种集合以外的取值: {e.args[0]}")
        return int(digits @ self._weights)

    def state(self, index: int) -> np.ndarray:
        return self.states[index].copy()

    def observable_vector(self, observable: Observable) -> np.ndarray:
        """f 在每个状态上的取值"""
        return np.array([observable.eval(s) for s in self.states], dtype=float)

    def distribution(self, counts: Counter) -> np.ndarray:
        """构型计数（键为取值元组）归一化为状态上的经验分布"""
        p = np.zeros(len(self))
        for state, count in counts.items():
            p[self.index(state)] += count
        total = p.sum()
        return p / total if total else p
