#!/usr/bin/env python3
"""
鋪砌引擎
Z^d 的二進位全等鋪砌、鋪砌邊界、Følner 集合分割引理與區塊組裝
"""

import logging
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from config.lab_config import LabConfig
from core.averaging import CorrelationEntry, SequenceWindow, cesaro_correlation
from core.domains import Domain
from core.errors import CoverageError, ScheduleError
from core.lattice_group import (
    FiniteLatticeSet,
    FolnerPlan,
    LatticeBox,
    LatticePoint,
    SUPPORTED_DIMS,
    as_point,
)

logger = logging.getLogger(__name__)


class Tile(NamedTuple):
    """第 level 層、左下角為 center 的瓦片 center + [0, 2^level)^d"""
    level: int
    center: LatticePoint

    def box(self) -> LatticeBox:
        return LatticeBox(self.center, (2 ** self.level,) * len(self.center))


@dataclass(frozen=True)
class Tiling:
    """形狀 [0, 2^k)^d、中心集 2^k Z^d 的鋪砌"""
    level: int
    dim: int

    @property
    def side(self) -> int:
        return 2 ** self.level

    @property
    def shape(self) -> LatticeBox:
        return LatticeBox.cube(self.side, self.dim)

    def shape_set(self) -> FiniteLatticeSet:
        return self.shape.to_set()

    def tile_index(self, points: np.ndarray) -> np.ndarray:
        return np.floor_divide(np.asarray(points, dtype=np.int64).reshape(-1, self.dim), self.side)

    def tile_of(self, point: Sequence[int]) -> Tile:
        idx = self.tile_index(np.asarray(as_point(point, self.dim))[None, :])[0]
        return Tile(self.level, tuple(int(x) * self.side for x in idx))

    def tiles_meeting_box(self, box: LatticeBox) -> np.ndarray:
        """與方塊相交的瓦片指標（列優先）"""
        if box.is_empty():
            return np.zeros((0, self.dim), dtype=np.int64)
        lo = np.floor_divide(box.lo, self.side)
        hi = np.floor_divide(box.hi - 1, self.side) + 1
        return LatticeBox.from_bounds(lo, hi).points()

    def tile_at(self, index: Sequence[int]) -> Tile:
        return Tile(self.level, tuple(int(x) * self.side for x in index))


def dyadic_tiling(k: int, d: int) -> Tiling:
    """第 k 層二進位鋪砌；相鄰層的全等性由構造保證"""
    if not 0 <= k <= 20:
        raise ValueError(f"鋪砌層級必須介於 0 與 20，收到 {k}")
    if d not in SUPPORTED_DIMS:
        raise ValueError(f"只支援 d ∈ {SUPPORTED_DIMS}")
    return Tiling(k, d)


def tiling_boundary(t: Tiling, B: Union[FiniteLatticeSet, LatticeBox]) -> FiniteLatticeSet:
    """所有同時與 B 及其補集相交的瓦片之聯集"""
    points = B.points() if isinstance(B, LatticeBox) else B.array
    if len(points) == 0:
        return FiniteLatticeSet.empty(t.dim)
    idx = t.tile_index(points)
    tiles, counts = np.unique(idx, axis=0, return_counts=True)
    straddling = tiles[counts < t.side ** t.dim]
    if len(straddling) == 0:
        return FiniteLatticeSet.empty(t.dim)
    offsets = t.shape.points()
    pts = (straddling[:, None, :] * t.side + offsets[None, :, :]).reshape(-1, t.dim)
    return FiniteLatticeSet(pts, t.dim)


def box_tiling_boundary_size(t: Tiling, box: LatticeBox) -> int:
    """方塊的 |∂_T B|，以每軸相交與包含的瓦片數解析計算"""
    if box.is_empty():
        return 0
    meeting = 1
    contained = 1
    for lo, hi in zip(box.lo, box.hi):
        first = lo // t.side
        last = (hi - 1) // t.side
        meeting *= int(last - first + 1)
        full_lo = -(-lo // t.side)
        full_hi = hi // t.side
        contained *= max(0, int(full_hi - full_lo))
    return (meeting - contained) * t.side ** t.dim


@dataclass(frozen=True)
class CongruentFamily:
    """層級 k_1 < k_2 < … 的全等鋪砌族"""
    levels: Tuple[int, ...]
    dim: int

    def __post_init__(self):
        if not self.levels:
            raise ValueError("鋪砌族至少需要一層")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise ValueError(f"層級必須嚴格遞增: {self.levels}")
        for k in self.levels:
            dyadic_tiling(k, self.dim)

    @classmethod
    def dyadic(cls, levels: Sequence[int], dim: int = 1) -> 'CongruentFamily':
        return cls(tuple(int(k) for k in levels), dim)

    @property
    def tilings(self) -> Tuple[Tiling, ...]:
        return tuple(dyadic_tiling(k, self.dim) for k in self.levels)

    def verify_congruency(self, samples: Sequence[Sequence[int]] = ((0,), (-1,), (3,))) -> bool:
        """抽樣檢查：每個上層瓦片恰好是 2^{d(k_{i+1}-k_i)} 個下層瓦片的不交聯集"""
        for fine, coarse in zip(self.tilings, self.tilings[1:]):
            for sample in samples:
                index = (list(sample) * self.dim)[:self.dim]
                tile = coarse.tile_at(index)
                pieces = fine.tiles_meeting_box(tile.box())
                expected = 2 ** (self.dim * (coarse.level - fine.level))
                if len(pieces) != expected:
                    return False
                covered = sum(fine.tile_at(p).box().size for p in pieces)
                if covered != tile.box().size:
                    return False
                for p in pieces:
                    if not tile.box().contains_box(fine.tile_at(p).box()):
                        return False
        return True


@dataclass
class TilePartition:
    """有限多個瓦片組成的分割，附 |A_N| / |F_N| 覆蓋比例"""
    tiles: List[Tile]
    dim: int
    thresholds: Tuple[int, ...] = ()
    fractions: Dict[int, float] = field(default_factory=dict)

    def count_per_level(self) -> Dict[int, int]:
        counts: Dict[int, int] = {}
        for tile in self.tiles:
            counts[tile.level] = counts.get(tile.level, 0) + 1
        return counts

    def covered_mask(self, box: LatticeBox) -> np.ndarray:
        mask = np.zeros(box.shape, dtype=np.int32)
        for tile in self.tiles:
            overlap = tile.box().intersect(box)
            if not overlap.is_empty():
                mask[overlap.slices_in(box)] += 1
        return mask

    def covered_set(self) -> FiniteLatticeSet:
        if not self.tiles:
            return FiniteLatticeSet.empty(self.dim)
        return FiniteLatticeSet(np.vstack([t.box().points() for t in self.tiles]), self.dim)

    def covered_fraction(self, F: LatticeBox) -> float:
        """|A_N| / |F_N|，A_N 為完全落在 F_N 內的瓦片聯集"""
        if F.is_empty():
            return 0.0
        inside = sum(t.box().size for t in self.tiles if F.contains_box(t.box()))
        return inside / F.size

    def is_disjoint(self) -> bool:
        if not self.tiles:
            return True
        lo = np.min([t.center for t in self.tiles], axis=0)
        hi = np.max([np.asarray(t.center) + 2 ** t.level for t in self.tiles], axis=0)
        return int(self.covered_mask(LatticeBox.from_bounds(lo, hi)).max()) <= 1

    def to_json(self) -> dict:
        return {
            'tiles': [{'level': t.level, 'center': list(t.center)} for t in self.tiles],
            'count_per_level': {str(k): v for k, v in sorted(self.count_per_level().items())},
            'thresholds': list(self.thresholds),
            'fractions': {str(n): f for n, f in sorted(self.fractions.items())}
        }


def default_checkpoints(n_max: int) -> List[int]:
    """檢查指標：2 的冪與其 1.5 倍，加上 N_max"""
    checkpoints = set()
    p = 1
    while p <= n_max:
        checkpoints.add(p)
        if p * 3 // 2 <= n_max and p > 1:
            checkpoints.add(p * 3 // 2)
        p *= 2
    checkpoints.add(n_max)
    return sorted(checkpoints)


def default_thresholds(family: CongruentFamily, plan: FolnerPlan, n_max: int,
                       checkpoints: Optional[Sequence[int]] = None) -> Tuple[int, ...]:
    """N_i = 最小的檢查點 N，使其後所有檢查點都滿足 |∂_{i+1}F_N| / |F_N| ≤ 1/(i+1)"""
    checkpoints = list(checkpoints) if checkpoints is not None else default_checkpoints(n_max)
    thresholds = []
    for i, coarse in enumerate(family.tilings[1:], start=1):
        ratios = [box_tiling_boundary_size(coarse, plan.box(n)) / plan.box(n).size for n in checkpoints]
        chosen = n_max
        for pos in range(len(checkpoints)):
            if all(r <= 1.0 / (i + 1) for r in ratios[pos:]):
                chosen = checkpoints[pos]
                break
        if thresholds:
            chosen = max(chosen, thresholds[-1])
        thresholds.append(min(chosen, n_max))
    return tuple(thresholds)


def congruent_partition(family: CongruentFamily, plan: FolnerPlan, n_max: int,
                        thresholds: Optional[Sequence[int]] = None,
                        checkpoints: Optional[Sequence[int]] = None) -> TilePartition:
    """
    Følner 集合分割引理的構造

    D_i 為與 F_{N_i} 相交的第 k_{i+1} 層瓦片之聯集（i < m），D_m 為與 F_{N_max} 相交的第 k_m 層瓦片；
    P 由 D_i ∖ D_{i-1} 中的第 k_i 層瓦片組成。越靠近原點瓦片越小，越外圍瓦片越大。
    """
    if plan.dim != family.dim:
        raise ScheduleError(f"鋪砌族維度 {family.dim} 與 Følner 計畫維度 {plan.dim} 不符")
    if n_max <= 0:
        return TilePartition([], family.dim)

    m = len(family.levels)
    if thresholds is None:
        thresholds = default_thresholds(family, plan, n_max, checkpoints)
    thresholds = tuple(int(n) for n in thresholds)
    if len(thresholds) == m and thresholds[-1] == n_max:
        thresholds = thresholds[:-1]
    if len(thresholds) != m - 1:
        raise ScheduleError(f"需要 {m - 1} 個門檻，收到 {len(thresholds)}")
    if any(b < a for a, b in zip(thresholds, thresholds[1:])):
        raise ScheduleError(f"門檻必須單調不減: {thresholds}")
    if any(n < 1 or n > n_max for n in thresholds):
        raise ScheduleError(f"門檻必須介於 1 與視窗指標 {n_max}: {thresholds}")

    tilings = family.tilings
    tiles: List[Tile] = []
    previous: Optional[np.ndarray] = None
    for i in range(m):
        fine = tilings[i]
        if i < m - 1:
            coarse = tilings[i + 1]
            region = coarse.tiles_meeting_box(plan.box(thresholds[i]))
            ratio = 2 ** (coarse.level - fine.level)
            offsets = LatticeBox.cube(ratio, family.dim).points()
            children = (region[:, None, :] * ratio + offsets[None, :, :]).reshape(-1, family.dim)
        else:
            children = fine.tiles_meeting_box(plan.box(n_max))
        children = np.unique(children, axis=0)
        if previous is not None and len(previous):
            lo = np.minimum(children.min(axis=0), previous.min(axis=0))
            hi = np.maximum(children.max(axis=0), previous.max(axis=0))
            shape = tuple(int(x) for x in hi - lo + 1)
            keys = np.ravel_multi_index(tuple((children - lo).T), shape)
            prev_keys = np.ravel_multi_index(tuple((previous - lo).T), shape)
            children = children[~np.isin(keys, prev_keys)]
        tiles.extend(fine.tile_at(idx) for idx in children)
        if i < m - 1:
            previous = region
        logger.debug(f"層級 {fine.level}: {len(children)} 個瓦片")

    partition = TilePartition(tiles, family.dim, thresholds + (n_max,))
    for n in sorted(set(list(checkpoints or default_checkpoints(n_max)) + [n_max])):
        partition.fractions[n] = partition.covered_fraction(plan.box(n))
    return partition


def balance_tiles(tiles: Sequence[Tile], K: int) -> Tuple[List[Tile], List[Tile]]:
    """每一層只保留 K 的倍數個瓦片，多出的最新瓦片被丟棄（回傳 保留, 丟棄）"""
    if K < 1:
        raise ValueError("K 必須 ≥ 1")
    by_level: Dict[int, List[Tile]] = {}
    for tile in tiles:
        by_level.setdefault(tile.level, []).append(tile)
    kept: List[Tile] = []
    dropped: List[Tile] = []
    for level in sorted(by_level):
        group = by_level[level]
        usable = len(group) - len(group) % K
        kept.extend(group[:usable])
        dropped.extend(group[usable:])
    return kept, dropped


def assemble_blocks(partition: TilePartition,
                    assignment: Union[Mapping[Tile, SequenceWindow], Callable[[Tile], SequenceWindow]],
                    fill: complex, box: Optional[LatticeBox] = None,
                    domain: Optional[Domain] = None) -> SequenceWindow:
    """
    把分割中每個瓦片對應的區塊（相對座標，須涵蓋 [0, 2^k)^d）貼到輸出方塊上；
    未覆蓋的格點填入 fill。超出輸出方塊的部分被裁切。
    box 預設為瓦片聯集的外接方塊，domain 預設取第一個區塊的定義域。
    """
    lookup = assignment if callable(assignment) else assignment.__getitem__
    if box is None:
        box = partition.covered_set().bounding_box()
        if box is None:
            raise ValueError("空分割需要指定輸出方塊")
    if domain is None:
        if not partition.tiles:
            raise ValueError("空分割需要指定定義域")
        domain = lookup(partition.tiles[0]).domain
    domain.validate(np.array([fill]), what='填充值')
    values = np.full(box.shape, complex(fill))
    for tile in partition.tiles:
        block = lookup(tile)
        shape_box = LatticeBox.cube(2 ** tile.level, len(tile.center))
        if not block.box.contains_box(shape_box):
            raise CoverageError(f"區塊 {block.box} 未涵蓋瓦片形狀 {shape_box}")
        overlap = tile.box().intersect(box)
        if overlap.is_empty():
            continue
        relative = overlap.translate(tuple(-c for c in tile.center))
        values[overlap.slices_in(box)] = block.values[relative.slices_in(block.box)]
    return SequenceWindow(box, values, domain)


def block_statistic(tiles: Sequence[Tile],
                    assignment: Union[Mapping[Tile, SequenceWindow], Callable[[Tile], SequenceWindow]],
                    e: CorrelationEntry) -> complex:
    """以瓦片大小加權的區塊統計量 Σ |T| · avg_T(p on block) / Σ |T|"""
    lookup = assignment if callable(assignment) else assignment.__getitem__
    total = 0.0 + 0.0j
    weight = 0
    for tile in tiles:
        shape_box = LatticeBox.cube(2 ** tile.level, len(tile.center))
        size = shape_box.size
        total += size * cesaro_correlation(lookup(tile), e, shape_box)
        weight += size
    if weight == 0:
        raise ValueError("沒有瓦片可供計算")
    return total / weight


def region_average(w: SequenceWindow, tiles: Sequence[Tile], e: CorrelationEntry) -> complex:
    """組裝後視窗在瓦片聯集 A 上的平均"""
    A = FiniteLatticeSet(np.vstack([t.box().points() for t in tiles]), w.dim)
    return cesaro_correlation(w, e, A)
