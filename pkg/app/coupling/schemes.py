"""
耦合方案描述
"""

from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from app.core.errors import ConfigError


class SchemeKind(str, Enum):
    UNCOUPLED = "uncoupled"  # 两个独立引擎、独立随机数流
    TRIVIAL = "trivial"  # c ≡ 0 的耦合生成元：共用一个指数时钟
    CRN = "crn"
    MICRO_UNOPT = "micro_unopt"  # c₀
    MICRO_OPT = "micro_opt"  # c₁
    COARSE = "coarse"  # c_q
    MACRO = "macro"  # c_N


class JointSelection(str, Enum):
    COMMON = "common"  # 联合分支中两个过程用同一个均匀数做类内逆变换选取
    INDEPENDENT = "independent"  # 两个过程各用一个均匀数


SCHEME_ALIASES = {
    "uncoupled_trivial": SchemeKind.UNCOUPLED,
    "micro_c0": SchemeKind.MICRO_UNOPT,
    "micro_c1": SchemeKind.MICRO_OPT,
}


class CouplingScheme(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: SchemeKind
    q: Optional[int] = Field(None, ge=1, description="粗粒化胞大小，仅 coarse 使用")
    selection: JointSelection = JointSelection.COMMON

    @property
    def label(self) -> str:
        if self.kind == SchemeKind.COARSE:
            return f"coarse_q{self.q}"
        return self.kind.value

    def cell_size(self, n_sites: int) -> int:
        """类耦合方案的胞大小；macro 即 q = N，micro_opt 即 q = 1"""
        if self.kind == SchemeKind.MACRO:
            return n_sites
        if self.kind == SchemeKind.MICRO_OPT:
            return 1
        if self.kind == SchemeKind.COARSE:
            if self.q is None or n_sites % self.q != 0:
                raise ConfigError(f"q={self.q} 必须整除格点数 N={n_sites}", section="coupling", key="q")
            return self.q
        raise ValueError(f"{self.kind.value} 不是按类耦合的方案")

    @property
    def is_class_based(self) -> bool:
        return self.kind in (SchemeKind.COARSE, SchemeKind.MACRO, SchemeKind.MICRO_OPT)

    @property
    def is_micro(self) -> bool:
        """按 (格点, 机制) 配对事件的方案"""
        return self.kind in (SchemeKind.TRIVIAL, SchemeKind.MICRO_UNOPT)

    @property
    def within_class_selection(self) -> JointSelection:
        """联合分支内的选取方式；micro_opt 的类内事件总是各自独立选取"""
        if self.kind == SchemeKind.MICRO_OPT:
            return JointSelection.INDEPENDENT
        return self.selection

    @classmethod
    def parse(cls, name: str, q: Optional[int] = None,
              selection: JointSelection = JointSelection.COMMON) -> "CouplingScheme":
        key = name.strip().lower()
        if key in SCHEME_ALIASES:
            kind = SCHEME_ALIASES[key]
        else:
            try:
                kind = SchemeKind(key)
            except ValueError:
                raise ConfigError(f"不支持的耦合方案: {name}", section="coupling", key="schemes")
        return cls(kind=kind, q=q if kind == SchemeKind.COARSE else None, selection=selection)

    @classmethod
    def for_q(cls, q: int, n_sites: int,
              selection: JointSelection = JointSelection.COMMON) -> "CouplingScheme":
        """q 扫描的约定：q = 0 为非耦合基线，q = N 为宏观耦合"""
        if q == 0:
            return cls(kind=SchemeKind.UNCOUPLED)
        if q == n_sites:
            return cls(kind=SchemeKind.MACRO, selection=selection)
        return cls(kind=SchemeKind.COARSE, q=q, selection=selection)
