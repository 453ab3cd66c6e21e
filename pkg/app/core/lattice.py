"""
格点、物种集合、邻域形状与局部构型更新
所有模块共用的状态表示：构型是长度为 N 的 int8 数组，格点按行优先编号，周期边界
"""

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from app.core.errors import LatticeError

Offset = Tuple[int, ...]


@dataclass(frozen=True)
class Lattice:
    """周期边界的 d 维格点（d = 1 或 2）"""

    shape: Tuple[int, ...]

    def __post_init__(self):
        if len(self.shape) not in (1, 2):
            raise LatticeError(f"只支持 1 维或 2 维格点: {self.shape}")
        if any(int(n) < 1 for n in self.shape):
            raise LatticeError(f"边长必须为正整数: {self.shape}")
        object.__setattr__(self, "shape", tuple(int(n) for n in self.shape))

    @property
    def dimension(self) -> int:
        return len(self.shape)

    @property
    def n_sites(self) -> int:
        return int(np.prod(self.shape))

    def validate_site(self, x: int) -> int:
        if not 0 <= x < self.n_sites:
            raise LatticeError(f"格点下标越界: {x}（N={self.n_sites}）")
        return int(x)

    def coords(self, x: int) -> Tuple[int, ...]:
        self.validate_site(x)
        return tuple(int(c) for c in np.unravel_index(x, self.shape))

    def site(self, coords: Sequence[int]) -> int:
        """坐标转格点下标，坐标按周期边界回绕"""
        if len(coords) != self.dimension:
            raise LatticeError(f"坐标维数 {len(coords)} 与格点维数 {self.dimension} 不符")
        wrapped = tuple(int(c) % n for c, n in zip(coords, self.shape))
        return int(np.ravel_multi_index(wrapped, self.shape))

    def distance(self, x: int, y: int) -> int:
        """周期边界下的曼哈顿距离"""
        total = 0
        for a, b, n in zip(self.coords(x), self.coords(y), self.shape):
            d = abs(a - b) % n
            total += min(d, n - d)
        return total

    def neighbor_table(self, shape: "NeighborhoodShape") -> np.ndarray:
        """(N, k) 数组，第 x 行为 neighborhood_sites(x)"""
        return _neighbor_table(self, shape)


@dataclass(frozen=True)
class SpeciesSet:
    values: Tuple[int, ...]
    vacant: Optional[int] = 0

    def __post_init__(self):
        if len(set(self.values)) != len(self.values):
            raise LatticeError(f"物种取值必须互不相同: {self.values}")
        if self.vacant is not None and self.vacant not in self.values:
            raise LatticeError(f"空位值 {self.vacant} 不在物种集合 {self.values} 中")

    @property
    def is_binary(self) -> bool:
        return set(self.values) == {0, 1}

    def validate(self, sigma: np.ndarray) -> None:
        if not np.isin(sigma, self.values).all():
            raise LatticeError(f"构型包含物种集合 {self.values} 以外的取值")


BINARY = SpeciesSet(values=(0, 1), vacant=0)
CO_OXIDATION = SpeciesSet(values=(-1, 0, 1), vacant=0)


@dataclass(frozen=True)
class NeighborhoodShape:
    """有序相对位移列表，第一个必须是零位移（格点自身）"""

    name: str
    offsets: Tuple[Offset, ...] = field(compare=True)

    def __post_init__(self):
        if not self.offsets:
            raise LatticeError(f"邻域 {self.name} 为空")
        dims = {len(o) for o in self.offsets}
        if len(dims) != 1:
            raise LatticeError(f"邻域 {self.name} 的位移维数不一致")
        if any(self.offsets[0]):
            raise LatticeError(f"邻域 {self.name} 的第一个位移必须是零位移")
        if len(set(self.offsets)) != len(self.offsets):
            raise LatticeError(f"邻域 {self.name} 的位移有重复")

    @property
    def k(self) -> int:
        return len(self.offsets)

    @property
    def dimension(self) -> int:
        return len(self.offsets[0])


# 1 维最近邻：(自身, 左, 右)
CHAIN_1D = NeighborhoodShape("chain_1d", ((0,), (-1,), (1,)))

# 2 维五点邻域：自身、右、上、左、下（行坐标向上为负）
VON_NEUMANN_2D = NeighborhoodShape("von_neumann_2d", ((0, 0), (0, 1), (-1, 0), (0, -1), (1, 0)))

# 17 点邻域：自身，8 个最近邻（逆时针，从右侧开始），8 个外圈格点
EVANS_17 = NeighborhoodShape(
    "evans_17",
    (
        (0, 0),
        (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1),
        (1, 2), (-1, 2), (-2, 1), (-2, -1), (-1, -2), (1, -2), (2, -1), (2, 1),
    ),
)


def single_site_shape(dimension: int) -> NeighborhoodShape:
    return NeighborhoodShape(f"single_{dimension}d", ((0,) * dimension,))


def axis_shape(dimension: int) -> NeighborhoodShape:
    """自身加全部轴向最近邻"""
    return CHAIN_1D if dimension == 1 else VON_NEUMANN_2D


def dependency_shape(shape: NeighborhoodShape, reads: Iterable[Offset] = ()) -> NeighborhoodShape:
    """
    受影响格点模板

    格点 y 上的事件读取 y + shape 的取值，观测量增量再读取其周围 reads 范围；
    若格点 t 被修改，则 y ∈ t − (shape ⊕ reads) 的事件都需要重新枚举
    """
    dim = shape.dimension
    zero = (0,) * dim
    reads = list(reads) or [zero]
    seen = {zero: None}
    for o in shape.offsets:
        for r in reads:
            seen.setdefault(tuple(-(a + b) for a, b in zip(o, r)), None)
    return NeighborhoodShape(f"{shape.name}_deps", tuple(seen))


@lru_cache(maxsize=64)
def _neighbor_table(lattice: Lattice, shape: NeighborhoodShape) -> np.ndarray:
    if shape.dimension != lattice.dimension:
        raise LatticeError(
            f"邻域 {shape.name} 的维数 {shape.dimension} 与格点维数 {lattice.dimension} 不符")
    coords = np.array(list(product(*(range(n) for n in lattice.shape))), dtype=np.int64)
    table = np.empty((lattice.n_sites, shape.k), dtype=np.int64)
    for j, offset in enumerate(shape.offsets):
        shifted = (coords + np.array(offset, dtype=np.int64)) % np.array(lattice.shape)
        table[:, j] = np.ravel_multi_index(tuple(shifted.T), lattice.shape)
    table.setflags(write=False)
    return table


class Event(NamedTuple):
    """事件 (x, ω)：把局部构型 ω 写入 x 的有序邻域；mechanism 标记产生它的规则"""

    site: int
    omega: Tuple[int, ...]
    mechanism: str


def neighborhood_sites(lattice: Lattice, shape: NeighborhoodShape, x: int) -> List[int]:
    lattice.validate_site(x)
    return [int(s) for s in lattice.neighbor_table(shape)[x]]


def event_changes(sigma: np.ndarray, event: Event, sites: Sequence[int]) -> List[Tuple[int, int, int]]:
    """
    事件实际修改的格点列表 [(site, old, new)]

    槽位 j 只有在 ω_j 与该格点事件前取值不同时才写入；邻域格点互不相同时
    等价于按顺序整体覆盖，退化小格点上（左右邻居重合）保持规则本意
    """
    if len(event.omega) != len(sites):
        raise LatticeError(f"ω 长度 {len(event.omega)} 与邻域大小 {len(sites)} 不符")
    changes = {}
    for site, new in zip(sites, event.omega):
        old = int(sigma[site])
        if new != old and site not in changes:
            changes[site] = (site, old, int(new))
    return list(changes.values())


def apply_update(sigma: np.ndarray, event: Event, lattice: Lattice,
                 shape: NeighborhoodShape) -> np.ndarray:
    """返回 σ^{x,ω}，不修改输入"""
    sites = neighborhood_sites(lattice, shape, event.site)
    updated = np.array(sigma, copy=True)
    for site, _, new in event_changes(sigma, event, sites):
        updated[site] = new
    return updated


def flip(sigma: np.ndarray, x: int, species: SpeciesSet = BINARY) -> np.ndarray:
    if not species.is_binary:
        raise LatticeError("flip 只适用于 {0,1} 物种集合")
    if not 0 <= x < len(sigma):
        raise LatticeError(f"格点下标越界: {x}")
    updated = np.array(sigma, copy=True)
    updated[x] = 1 - updated[x]
    return updated


def make_configuration(lattice: Lattice, values: Iterable[int],
                       species: SpeciesSet = BINARY) -> np.ndarray:
    sigma = np.asarray(list(values), dtype=np.int8)
    if sigma.shape != (lattice.n_sites,):
        raise LatticeError(f"构型长度 {sigma.size} 与格点数 {lattice.n_sites} 不符")
    species.validate(sigma)
    return sigma
