"""
观测量 f 及其增量 f(σ^{x,ω}) − f(σ)

计数型观测量（覆盖度、物种覆盖度、对关联）的增量先按整数计数算出再除以分母，
所以增量为零时严格等于 0，分类不会遇到浮点平局
"""

from abc import ABC, abstractmethod
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.core.errors import ConfigError
from app.core.lattice import Event, Lattice, NeighborhoodShape, Offset, SpeciesSet, event_changes

Change = Tuple[int, int, int]  # (site, old, new)


class Observable(ABC):
    """观测量抽象基类"""

    name: str = ""

    def __init__(self, lattice: Lattice):
        self.lattice = lattice

    @abstractmethod
    def eval(self, sigma: np.ndarray) -> float:
        pass

    @abstractmethod
    def delta(self, sigma: np.ndarray, changes: Sequence[Change]) -> float:
        """给定修改列表时的增量，只读取被修改格点附近"""
        pass

    @abstractmethod
    def exact_delta(self, sigma: np.ndarray, changes: Sequence[Change]) -> Fraction:
        pass

    def reads(self) -> List[Offset]:
        """增量计算读取的相对位移（相对于被修改的格点）"""
        return [(0,) * self.lattice.dimension]

    def event_delta(self, sigma: np.ndarray, event: Event, sites: Sequence[int]) -> float:
        return self.delta(sigma, event_changes(sigma, event, sites))


class CountObservable(Observable):
    """值为 (整数计数)/denominator 的观测量"""

    denominator: int = 1

    @abstractmethod
    def count(self, sigma: np.ndarray) -> int:
        pass

    @abstractmethod
    def count_delta(self, sigma: np.ndarray, changes: Sequence[Change]) -> int:
        pass

    def eval(self, sigma: np.ndarray) -> float:
        return self.count(sigma) / self.denominator

    def delta(self, sigma: np.ndarray, changes: Sequence[Change]) -> float:
        return self.count_delta(sigma, changes) / self.denominator

    def exact_delta(self, sigma: np.ndarray, changes: Sequence[Change]) -> Fraction:
        return Fraction(self.count_delta(sigma, changes), self.denominator)


class Coverage(CountObservable):
    """非空位格点所占比例"""

    name = "coverage"

    def __init__(self, lattice: Lattice, species: SpeciesSet):
        super().__init__(lattice)
        self.vacant = species.vacant if species.vacant is not None else 0
        self.denominator = lattice.n_sites

    def count(self, sigma: np.ndarray) -> int:
        return int(np.count_nonzero(sigma != self.vacant))

    def count_delta(self, sigma, changes) -> int:
        vacant = self.vacant
        return sum((new != vacant) - (old != vacant) for _, old, new in changes)


class SpeciesCoverage(CountObservable):
    """物种 s 所占比例"""

    def __init__(self, lattice: Lattice, species: SpeciesSet, target: int):
        super().__init__(lattice)
        if target not in species.values:
            raise ConfigError(f"物种 {target} 不在 {species.values} 中", section="observable", key="species")
        self.target = target
        self.name = f"species_coverage({target})"
        self.denominator = lattice.n_sites

    def count(self, sigma: np.ndarray) -> int:
        return int(np.count_nonzero(sigma == self.target))

    def count_delta(self, sigma, changes) -> int:
        s = self.target
        return sum((new == s) - (old == s) for _, old, new in changes)


class _BondSum:
    """沿各轴间隔为 r 的格点对 (a, a + r·e_axis) 的求和工具"""

    def __init__(self, lattice: Lattice, r: int):
        self.lattice = lattice
        self.r = r
        dim = lattice.dimension
        offsets = [(0,) * dim]
        for axis in range(dim):
            for sign in (1, -1):
                o = [0] * dim
                o[axis] = sign * r
                offsets.append(tuple(o))
        # 自身 + 各轴 ±r；零位移重复（r 是边长倍数）时只做查表用，不进形状
        self.offsets = offsets
        unique = list(dict.fromkeys(offsets))
        shape = NeighborhoodShape(f"bond_{r}", tuple(unique))
        table = lattice.neighbor_table(shape)
        index = {o: j for j, o in enumerate(unique)}
        self.forward = [table[:, index[offsets[1 + 2 * a]]].tolist() for a in range(dim)]
        self.backward = [table[:, index[offsets[2 + 2 * a]]].tolist() for a in range(dim)]

    def total(self, values: np.ndarray) -> int:
        grid = values.reshape(self.lattice.shape).astype(np.int64)
        return int(sum(np.sum(grid * np.roll(grid, -self.r, axis=a))
                       for a in range(self.lattice.dimension)))

    def change(self, old_value, new_value: Dict[int, int], sites: Sequence[int]) -> int:
        """修改后对总和的整数增量；old_value(site) 返回修改前的取值"""
        pairs = set()
        for t in sites:
            for axis in range(self.lattice.dimension):
                pairs.add((t, axis))
                pairs.add((self.backward[axis][t], axis))
        diff = 0
        for a, axis in pairs:
            b = self.forward[axis][a]
            na = new_value.get(a, old_value(a))
            nb = new_value.get(b, old_value(b))
            diff += na * nb - old_value(a) * old_value(b)
        return diff


class PairCorrelation(CountObservable):
    """C(r) = (1/(N·d)) Σ_x Σ_axis occ(x)·occ(x + r·e_axis)"""

    def __init__(self, lattice: Lattice, species: SpeciesSet, r: int):
        super().__init__(lattice)
        if r < 1:
            raise ConfigError(f"对关联距离 r 必须为正: {r}", section="observable", key="r")
        self.r = r
        self.name = f"pair_correlation({r})"
        self.vacant = species.vacant if species.vacant is not None else 0
        self.bonds = _BondSum(lattice, r)
        self.denominator = lattice.n_sites * lattice.dimension

    def reads(self) -> List[Offset]:
        return list(dict.fromkeys(self.bonds.offsets))

    def count(self, sigma: np.ndarray) -> int:
        return self.bonds.total((sigma != self.vacant).astype(np.int64))

    def count_delta(self, sigma, changes) -> int:
        vacant = self.vacant
        new = {s: int(n != vacant) for s, _, n in changes}
        return self.bonds.change(lambda s: int(sigma[s] != vacant), new, list(new))


class Hamiltonian(Observable):
    """H(σ) = −J Σ_{⟨x,y⟩} σ(x)σ(y) − h Σ_x σ(x)，键为各轴最近邻"""

    name = "hamiltonian"

    def __init__(self, lattice: Lattice, J: float, h: float):
        super().__init__(lattice)
        self.J = J
        self.h = h
        self.bonds = _BondSum(lattice, 1)

    def reads(self) -> List[Offset]:
        return list(dict.fromkeys(self.bonds.offsets))

    def eval(self, sigma: np.ndarray) -> float:
        return -self.J * self.bonds.total(sigma) - self.h * int(np.sum(sigma, dtype=np.int64))

    def _counts(self, sigma, changes) -> Tuple[int, int]:
        new = {s: n for s, _, n in changes}
        d_bonds = self.bonds.change(lambda s: int(sigma[s]), new, list(new))
        d_sites = sum(n - o for _, o, n in changes)
        return d_bonds, d_sites

    def delta(self, sigma, changes) -> float:
        d_bonds, d_sites = self._counts(sigma, changes)
        return -self.J * d_bonds - self.h * d_sites

    def exact_delta(self, sigma, changes) -> Fraction:
        d_bonds, d_sites = self._counts(sigma, changes)
        return -Fraction(self.J) * d_bonds - Fraction(self.h) * d_sites


OBSERVABLE_NAMES = ("coverage", "species_coverage", "pair_correlation", "hamiltonian")


def get_observable(name: str, lattice: Lattice, species: SpeciesSet, *,
                   target: Optional[int] = None, r: int = 1,
                   J: Optional[float] = None, h: Optional[float] = None) -> Observable:
    """根据名称构造观测量"""
    if name == "coverage":
        return Coverage(lattice, species)
    if name == "species_coverage":
        if target is None:
            raise ConfigError("species_coverage 需要指定 species", section="observable", key="species")
        return SpeciesCoverage(lattice, species, target)
    if name == "pair_correlation":
        return PairCorrelation(lattice, species, r)
    if name == "hamiltonian":
        if J is None or h is None:
            raise ConfigError("hamiltonian 需要模型参数 J 和 h", section="observable", key="name")
        return Hamiltonian(lattice, J, h)
    raise ConfigError(f"不支持的观测量: {name}", section="observable", key="name")
