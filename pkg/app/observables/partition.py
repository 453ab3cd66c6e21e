"""
观测量增量的水平集划分 {J_k}
"""

import math
import re
from bisect import bisect_left
from dataclasses import dataclass
from typing import List, Sequence, Tuple

from app.core.errors import ConfigError


@dataclass(frozen=True)
class Piece:
    """实数轴上的一段区间或单点"""

    lo: float
    hi: float
    lo_closed: bool
    hi_closed: bool

    def __contains__(self, value: float) -> bool:
        if value < self.lo or value > self.hi:
            return False
        if value == self.lo and not self.lo_closed:
            return False
        if value == self.hi and not self.hi_closed:
            return False
        return True

    def __str__(self) -> str:
        if self.lo == self.hi:
            return f"{{{_fmt(self.lo)}}}"
        left = "[" if self.lo_closed else "("
        right = "]" if self.hi_closed else ")"
        return f"{left}{_fmt(self.lo)},{_fmt(self.hi)}{right}"


def _fmt(value: float) -> str:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(value)


class Partition:
    """有序、互不相交、覆盖全体实数的集合 J_1..J_m"""

    def __init__(self, pieces: Sequence[Piece]):
        pieces = sorted(pieces, key=lambda p: (p.lo, not p.lo_closed))
        if not pieces:
            raise ConfigError("划分不能为空", section="observable", key="partition")
        if pieces[0].lo != -math.inf or pieces[-1].hi != math.inf:
            raise ConfigError("划分必须覆盖 (-inf, inf)", section="observable", key="partition")
        for left, right in zip(pieces, pieces[1:]):
            if left.hi != right.lo:
                raise ConfigError(f"划分在 {left} 与 {right} 之间有缺口或重叠",
                                  section="observable", key="partition")
            if left.hi_closed == right.lo_closed:
                kind = "重叠" if left.hi_closed else "缺口"
                raise ConfigError(f"划分在 {_fmt(left.hi)} 处{kind}",
                                  section="observable", key="partition")
        for piece in pieces:
            if piece.lo > piece.hi or (piece.lo == piece.hi and not (piece.lo_closed and piece.hi_closed)):
                raise ConfigError(f"非法区间: {piece}", section="observable", key="partition")
        self.pieces: Tuple[Piece, ...] = tuple(pieces)
        self._bounds: List[float] = [p.hi for p in self.pieces]

    @property
    def size(self) -> int:
        return len(self.pieces)

    def classify(self, value: float) -> int:
        """返回包含 value 的集合下标（0 起）"""
        i = bisect_left(self._bounds, value)
        piece = self.pieces[i]
        if value in piece:
            return i
        return i + 1

    def zero_class(self) -> int:
        return self.classify(0.0)

    def __str__(self) -> str:
        return "; ".join(str(p) for p in self.pieces)

    def __eq__(self, other) -> bool:
        return isinstance(other, Partition) and self.pieces == other.pieces

    def __hash__(self) -> int:
        return hash(self.pieces)

    @classmethod
    def default(cls) -> "Partition":
        """J_1 = (−∞,0)，J_2 = {0}，J_3 = (0,∞)"""
        return cls([
            Piece(-math.inf, 0.0, False, False),
            Piece(0.0, 0.0, True, True),
            Piece(0.0, math.inf, False, False),
        ])

    @classmethod
    def parse(cls, text: str) -> "Partition":
        """
        解析形如 "(-inf,0); {0}; (0,inf)" 的划分描述
        区间用 () 或 [] 表示开闭，单点用 {v}
        """
        pieces = []
        for raw in (t.strip() for t in text.split(";")):
            if not raw:
                continue
            point = re.fullmatch(r"\{\s*([^}]+)\s*\}", raw)
            if point:
                v = _parse_number(point.group(1))
                pieces.append(Piece(v, v, True, True))
                continue
            interval = re.fullmatch(r"([\(\[])\s*([^,]+),\s*([^\)\]]+)\s*([\)\]])", raw)
            if not interval:
                raise ConfigError(f"无法解析的划分片段: {raw}", section="observable", key="partition")
            lo = _parse_number(interval.group(2))
            hi = _parse_number(interval.group(3))
            pieces.append(Piece(lo, hi, interval.group(1) == "[" and not math.isinf(lo),
                                interval.group(4) == "]" and not math.isinf(hi)))
        return cls(pieces)


def _parse_number(text: str) -> float:
    try:
        return float(text.strip())
    except ValueError:
        raise ConfigError(f"非法数值: {text}", section="observable", key="partition")
