#!/usr/bin/env python3
"""
格群模組
Z^d 的元素、有限子集、Følner 方塊、邊界算子與不變比
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

LatticePoint = Tuple[int, ...]

SUPPORTED_DIMS = (1, 2, 3)
FOLNER_STYLES = ('anchored', 'centered', 'positive')


def as_point(coords: Union[int, Sequence[int]], dim: Optional[int] = None) -> LatticePoint:
    """把整數或整數序列轉成 LatticePoint"""
    if isinstance(coords, (int, np.integer)):
        point = (int(coords),)
    else:
        point = tuple(int(c) for c in coords)
    if dim is not None and len(point) != dim:
        raise ValueError(f"格點維度 {len(point)} 與預期維度 {dim} 不符: {point}")
    return point


def add_points(a: LatticePoint, b: LatticePoint) -> LatticePoint:
    return tuple(x + y for x, y in zip(a, b))


def negate_point(a: LatticePoint) -> LatticePoint:
    return tuple(-x for x in a)


def _check_dim(dim: int):
    if dim not in SUPPORTED_DIMS:
        raise ValueError(f"只支援 d ∈ {SUPPORTED_DIMS}，收到 d={dim}")


def _encode(points: np.ndarray, lo: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """以共同外框把格點編成一維整數鍵"""
    if len(points) == 0:
        return np.zeros(0, dtype=np.int64)
    rel = (points - lo).T
    return np.ravel_multi_index(tuple(rel), shape).astype(np.int64)


def _joint_frame(*arrays: np.ndarray) -> Tuple[np.ndarray, Tuple[int, ...]]:
    nonempty = [a for a in arrays if len(a)]
    stacked = np.vstack(nonempty)
    lo = stacked.min(axis=0)
    hi = stacked.max(axis=0)
    return lo, tuple(int(x) for x in (hi - lo + 1))


class FiniteLatticeSet:
    """Z^d 的有限子集，內部以排序且唯一的 (n, d) int64 陣列儲存"""

    __slots__ = ('_points', '_dim', '_frozen')

    def __init__(self, points: np.ndarray, dim: int, _trusted: bool = False):
        _check_dim(dim)
        arr = np.asarray(points, dtype=np.int64).reshape(-1, dim)
        if not _trusted and len(arr):
            arr = np.unique(arr, axis=0)
        arr.setflags(write=False)
        self._points = arr
        self._dim = dim
        self._frozen = None

    # ------------------------------------------------------------
    # 建構
    # ------------------------------------------------------------
    @classmethod
    def from_points(cls, points: Iterable[Union[int, Sequence[int]]], dim: Optional[int] = None) -> 'FiniteLatticeSet':
        rows = [as_point(p) for p in points]
        if not rows:
            if dim is None:
                raise ValueError("空集合必須指定維度")
            return cls.empty(dim)
        dim = dim or len(rows[0])
        for row in rows:
            if len(row) != dim:
                raise ValueError(f"所有格點必須同為 {dim} 維: {row}")
        return cls(np.array(rows, dtype=np.int64), dim)

    @classmethod
    def empty(cls, dim: int) -> 'FiniteLatticeSet':
        return cls(np.zeros((0, dim), dtype=np.int64), dim, _trusted=True)

    @classmethod
    def from_mask(cls, mask: np.ndarray, origin: Sequence[int]) -> 'FiniteLatticeSet':
        """由布林陣列（以 origin 為左下角）取出格點"""
        idx = np.argwhere(mask)
        return cls(idx + np.asarray(origin, dtype=np.int64), mask.ndim, _trusted=True)

    # ------------------------------------------------------------
    # 基本協定
    # ------------------------------------------------------------
    @property
    def dim(self) -> int:
        return self._dim

    @property
    def array(self) -> np.ndarray:
        return self._points

    def __len__(self) -> int:
        return len(self._points)

    def __iter__(self) -> Iterator[LatticePoint]:
        for row in self._points:
            yield tuple(int(x) for x in row)

    def as_frozenset(self) -> frozenset:
        if self._frozen is None:
            self._frozen = frozenset(iter(self))
        return self._frozen

    def __contains__(self, point) -> bool:
        return as_point(point, self._dim) in self.as_frozenset()

    def __eq__(self, other) -> bool:
        if not isinstance(other, FiniteLatticeSet):
            return NotImplemented
        return self._dim == other._dim and np.array_equal(self._points, other._points)

    def __hash__(self) -> int:
        return hash((self._dim, self._points.tobytes()))

    def __repr__(self) -> str:
        preview = list(self)[:6]
        suffix = ', ...' if len(self) > 6 else ''
        return f"FiniteLatticeSet(dim={self._dim}, n={len(self)}, points={preview}{suffix})"

    # ------------------------------------------------------------
    # 集合運算
    # ------------------------------------------------------------
    def contains_points(self, points: np.ndarray) -> np.ndarray:
        """向量化成員測試，回傳布林遮罩"""
        points = np.asarray(points, dtype=np.int64).reshape(-1, self._dim)
        if len(self) == 0 or len(points) == 0:
            return np.zeros(len(points), dtype=bool)
        lo, shape = _joint_frame(self._points, points)
        return np.isin(_encode(points, lo, shape), _encode(self._points, lo, shape))

    def translate(self, offset: Sequence[int]) -> 'FiniteLatticeSet':
        offset = np.asarray(as_point(offset, self._dim), dtype=np.int64)
        return FiniteLatticeSet(self._points + offset, self._dim, _trusted=True)

    def union(self, other: 'FiniteLatticeSet') -> 'FiniteLatticeSet':
        self._same_dim(other)
        return FiniteLatticeSet(np.vstack([self._points, other._points]), self._dim)

    def intersection(self, other: 'FiniteLatticeSet') -> 'FiniteLatticeSet':
        self._same_dim(other)
        keep = other.contains_points(self._points)
        return FiniteLatticeSet(self._points[keep], self._dim, _trusted=True)

    def difference(self, other: 'FiniteLatticeSet') -> 'FiniteLatticeSet':
        self._same_dim(other)
        keep = ~other.contains_points(self._points)
        return FiniteLatticeSet(self._points[keep], self._dim, _trusted=True)

    def issubset(self, other: 'FiniteLatticeSet') -> bool:
        self._same_dim(other)
        return bool(other.contains_points(self._points).all())

    def filter(self, predicate: Callable[[np.ndarray], np.ndarray]) -> 'FiniteLatticeSet':
        """以向量化謂詞（輸入 (n, d) 陣列）篩選格點"""
        if len(self) == 0:
            return self
        keep = np.asarray(predicate(self._points), dtype=bool)
        return FiniteLatticeSet(self._points[keep], self._dim, _trusted=True)

    def bounding_box(self) -> Optional['LatticeBox']:
        if len(self) == 0:
            return None
        lo = self._points.min(axis=0)
        hi = self._points.max(axis=0) + 1
        return LatticeBox(tuple(int(x) for x in lo), tuple(int(x) for x in (hi - lo)))

    def _same_dim(self, other: 'FiniteLatticeSet'):
        if other._dim != self._dim:
            raise ValueError(f"維度不符: {self._dim} vs {other._dim}")

    # ------------------------------------------------------------
    # 序列化
    # ------------------------------------------------------------
    def to_json(self) -> List[List[int]]:
        return [list(p) for p in self]

    @classmethod
    def from_json(cls, data: List, dim: Optional[int] = None) -> 'FiniteLatticeSet':
        return cls.from_points(data, dim=dim)


@dataclass(frozen=True)
class LatticeBox:
    """軸對齊方塊 origin + [0, shape)"""
    origin: LatticePoint
    shape: Tuple[int, ...]

    def __post_init__(self):
        if len(self.origin) != len(self.shape):
            raise ValueError(f"origin 與 shape 維度不符: {self.origin} / {self.shape}")
        if any(s < 0 for s in self.shape):
            raise ValueError(f"方塊邊長不可為負: {self.shape}")

    @classmethod
    def from_bounds(cls, lo: Sequence[int], hi: Sequence[int]) -> 'LatticeBox':
        """由半開區間 [lo, hi) 建立"""
        lo = tuple(int(x) for x in lo)
        hi = tuple(int(x) for x in hi)
        return cls(lo, tuple(max(0, b - a) for a, b in zip(lo, hi)))

    @classmethod
    def cube(cls, side: int, dim: int, origin: Optional[Sequence[int]] = None) -> 'LatticeBox':
        origin = tuple(origin) if origin is not None else (0,) * dim
        return cls(origin, (int(side),) * dim)

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def lo(self) -> np.ndarray:
        return np.asarray(self.origin, dtype=np.int64)

    @property
    def hi(self) -> np.ndarray:
        return self.lo + np.asarray(self.shape, dtype=np.int64)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape)) if self.shape else 0

    def is_empty(self) -> bool:
        return self.size == 0

    def points(self) -> np.ndarray:
        """列優先 (row-major) 次序的全部格點"""
        if self.is_empty():
            return np.zeros((0, self.dim), dtype=np.int64)
        grids = np.indices(self.shape, dtype=np.int64).reshape(self.dim, -1).T
        return grids + self.lo

    def to_set(self) -> FiniteLatticeSet:
        return FiniteLatticeSet(self.points(), self.dim, _trusted=True)

    def translate(self, offset: Sequence[int]) -> 'LatticeBox':
        return LatticeBox(add_points(self.origin, as_point(offset, self.dim)), self.shape)

    def expand(self, shifts: np.ndarray) -> 'LatticeBox':
        """涵蓋 ∪_h (box + h) 的最小方塊"""
        shifts = np.asarray(shifts, dtype=np.int64).reshape(-1, self.dim)
        if len(shifts) == 0:
            return self
        lo = self.lo + np.minimum(shifts.min(axis=0), 0)
        hi = self.hi + np.maximum(shifts.max(axis=0), 0)
        return LatticeBox.from_bounds(lo, hi)

    def contains_box(self, other: 'LatticeBox') -> bool:
        if other.is_empty():
            return True
        return bool(np.all(other.lo >= self.lo) and np.all(other.hi <= self.hi))

    def contains_points(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.int64).reshape(-1, self.dim)
        return np.all((points >= self.lo) & (points < self.hi), axis=1)

    def intersect(self, other: 'LatticeBox') -> 'LatticeBox':
        return LatticeBox.from_bounds(np.maximum(self.lo, other.lo), np.minimum(self.hi, other.hi))

    def slices_in(self, outer: 'LatticeBox') -> Tuple[slice, ...]:
        """本方塊在 outer 陣列中的切片；呼叫端須先確認包含關係"""
        start = self.lo - outer.lo
        return tuple(slice(int(a), int(a) + int(s)) for a, s in zip(start, self.shape))


@dataclass(frozen=True)
class FolnerPlan:
    """方塊型 Følner 序列：F_N 的邊長為 side(N)"""
    dim: int = 1
    style: str = 'anchored'
    side: Callable[[int], int] = field(default=lambda n: n, compare=False)
    side_label: str = 'N'

    def __post_init__(self):
        _check_dim(self.dim)
        if self.style not in FOLNER_STYLES:
            raise ValueError(f"未知的 Følner 方塊樣式: {self.style}")

    def side_of(self, n: int) -> int:
        if n < 1:
            raise ValueError(f"Følner 指標必須 ≥ 1，收到 {n}")
        s = int(self.side(n))
        if s < 1:
            raise ValueError(f"side({n}) = {s} 必須 ≥ 1")
        return s

    def box(self, n: int) -> LatticeBox:
        s = self.side_of(n)
        if self.style == 'anchored':
            lo = 0
        elif self.style == 'centered':
            lo = -(s // 2)
        else:
            lo = 1
        return LatticeBox((lo,) * self.dim, (s,) * self.dim)

    def describe(self) -> dict:
        return {'dim': self.dim, 'style': self.style, 'side': self.side_label}


def folner_box(plan: FolnerPlan, n: int) -> FiniteLatticeSet:
    """回傳 F_N（anchored: [0, side)^d；centered: 以原點為中心；positive: [1, side]^d）"""
    return plan.box(n).to_set()


def _as_array(s: Union[FiniteLatticeSet, LatticeBox]) -> Tuple[np.ndarray, int]:
    if isinstance(s, LatticeBox):
        return s.points(), s.dim
    return s.array, s.dim


def boundary_set(S: Union[FiniteLatticeSet, LatticeBox], T: Union[FiniteLatticeSet, LatticeBox]) -> FiniteLatticeSet:
    """
    ∂_S T = { g : (S+g)∩T ≠ ∅ 且 (S+g) ⊄ T }

    候選 g 必為 t − s 的形式；g 被命中的次數等於 |{s : s+g ∈ T}|，
    介於 0 與 |S| 之間（不含 |S|）者即為邊界點。
    """
    s_pts, dim = _as_array(S)
    t_pts, t_dim = _as_array(T)
    if dim != t_dim:
        raise ValueError(f"維度不符: {dim} vs {t_dim}")
    if len(s_pts) == 0:
        raise ValueError("S 不可為空集合")
    if len(t_pts) == 0:
        return FiniteLatticeSet.empty(dim)

    diffs = (t_pts[:, None, :] - s_pts[None, :, :]).reshape(-1, dim)
    lo, shape = _joint_frame(diffs)
    keys, counts = np.unique(_encode(diffs, lo, shape), return_counts=True)
    straddling = keys[counts < len(s_pts)]
    coords = np.stack(np.unravel_index(straddling, shape), axis=1).astype(np.int64) + lo
    return FiniteLatticeSet(coords, dim, _trusted=True)


def invariance_ratio(S: Union[FiniteLatticeSet, LatticeBox], F: Union[FiniteLatticeSet, LatticeBox]) -> float:
    """|∂_S F| / |F|"""
    size = F.size if isinstance(F, LatticeBox) else len(F)
    if size == 0:
        raise ValueError("F 不可為空集合")
    return len(boundary_set(S, F)) / size


def symmetric_difference_ratio(F: FiniteLatticeSet, h: Sequence[int]) -> float:
    """|F Δ (F + h)| / |F|"""
    moved = F.translate(h)
    sym = len(F.difference(moved)) + len(moved.difference(F))
    return sym / len(F)
