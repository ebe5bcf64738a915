#!/usr/bin/env python3
"""
平均模組
視窗序列沿 Følner 方塊的 Cesàro 相關平均、Weyl 均勻分佈檢定、集合密度與 limsup 代理值
"""

import logging
from dataclasses import dataclass, field
from itertools import product
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from config.lab_config import LabConfig
from core.domains import Domain, DomainTag
from core.errors import CoverageError, DomainError
from core.lattice_group import (
    FiniteLatticeSet,
    FolnerPlan,
    LatticeBox,
    LatticePoint,
    as_point,
)

logger = logging.getLogger(__name__)

Region = Union[LatticeBox, FiniteLatticeSet]


# ================================================================
# 視窗序列
# ================================================================

class SequenceWindow:
    """有界方塊上的序列 g ↦ z_g ∈ D；方塊內每一點都有值"""

    __slots__ = ('box', 'values', 'domain')

    def __init__(self, box: LatticeBox, values: np.ndarray, domain: Domain,
                 validate: bool = True, tol: Optional[float] = None):
        values = np.asarray(values, dtype=complex)
        if values.shape != tuple(box.shape):
            raise ValueError(f"數值陣列形狀 {values.shape} 與方塊 {box.shape} 不符")
        if validate:
            domain.validate(values, tol)
        values.setflags(write=False)
        self.box = box
        self.values = values
        self.domain = domain

    @classmethod
    def constant(cls, box: LatticeBox, value: complex, domain: Domain) -> 'SequenceWindow':
        return cls(box, np.full(box.shape, complex(value)), domain)

    @classmethod
    def from_function(cls, box: LatticeBox, fn, domain: Domain) -> 'SequenceWindow':
        """fn 接收 d 個座標陣列（np.indices 形式）"""
        coords = np.indices(box.shape, dtype=np.int64)
        coords = [coords[i] + box.origin[i] for i in range(box.dim)]
        return cls(box, np.asarray(fn(*coords), dtype=complex), domain)

    @classmethod
    def from_set(cls, A: FiniteLatticeSet, box: LatticeBox) -> 'SequenceWindow':
        """集合 A 在方塊上的指示函數"""
        inside = A.filter(box.contains_points)
        values = np.zeros(box.shape)
        if len(inside):
            values[tuple((inside.array - box.lo).T)] = 1.0
        return cls(box, values, Domain.binary())

    @property
    def dim(self) -> int:
        return self.box.dim

    def covers(self, region: Region) -> bool:
        if isinstance(region, LatticeBox):
            return self.box.contains_box(region)
        return bool(self.box.contains_points(region.array).all())

    def value_at(self, point) -> complex:
        point = np.asarray(as_point(point, self.dim), dtype=np.int64)
        return complex(self.gather(point[None, :])[0])

    def gather(self, points: np.ndarray) -> np.ndarray:
        """取出多個格點的值；任何點在視窗外即拋出 CoverageError"""
        points = np.asarray(points, dtype=np.int64).reshape(-1, self.dim)
        inside = self.box.contains_points(points)
        if not inside.all():
            missing = points[~inside][0]
            raise CoverageError(f"視窗 {self.box} 未涵蓋格點 {tuple(int(x) for x in missing)}")
        return self.values[tuple((points - self.box.lo).T)]

    def slice_box(self, box: LatticeBox) -> np.ndarray:
        if not self.box.contains_box(box):
            raise CoverageError(f"視窗 {self.box} 未涵蓋方塊 {box}")
        return self.values[box.slices_in(self.box)]

    def restrict(self, box: LatticeBox) -> 'SequenceWindow':
        return SequenceWindow(box, self.slice_box(box), self.domain, validate=False)

    def relabel(self, domain: Domain) -> 'SequenceWindow':
        return SequenceWindow(self.box, self.values, domain)

    def support(self, tol: float = 0.5) -> FiniteLatticeSet:
        """數值實部大於 tol 的格點（{0,1} 視窗即集合 A）"""
        return FiniteLatticeSet.from_mask(self.values.real > tol, self.box.origin)

    def __repr__(self) -> str:
        return f"SequenceWindow(box={self.box}, domain={self.domain.tag.value})"


# ================================================================
# *-多項式與相關規格
# ================================================================

Exponents = Tuple[Tuple[int, int], ...]


@dataclass(frozen=True)
class StarPolynomial:
    """p(z_1..z_j) = Σ c · Π z_i^{a_i} conj(z_i)^{b_i}，附帶上界 M ≥ sup_D |p|"""
    arity: int
    terms: Tuple[Tuple[complex, Exponents], ...]
    sup_bound: float

    def __post_init__(self):
        if self.arity < 1:
            raise ValueError("多項式的元數必須 ≥ 1")
        for coef, exps in self.terms:
            if len(exps) != self.arity:
                raise ValueError(f"指數長度 {len(exps)} 與元數 {self.arity} 不符")
            if any(a < 0 or b < 0 for a, b in exps):
                raise ValueError(f"指數必須為非負整數: {exps}")
        if self.sup_bound < 0:
            raise ValueError("上界不可為負")

    # ------------------------------------------------------------
    # 常用多項式
    # ------------------------------------------------------------
    @classmethod
    def build(cls, arity: int, terms: Iterable[Tuple[complex, Sequence[Sequence[int]]]],
              sup_bound: Optional[float] = None, modulus: float = 1.0) -> 'StarPolynomial':
        """sup_bound 省略時以三角不等式 Σ|c|·R^{deg} 估計"""
        normalized = tuple((complex(c), tuple((int(a), int(b)) for a, b in exps)) for c, exps in terms)
        if sup_bound is None:
            sup_bound = sum(abs(c) * modulus ** sum(a + b for a, b in exps) for c, exps in normalized)
        return cls(arity, normalized, float(sup_bound))

    @classmethod
    def identity(cls) -> 'StarPolynomial':
        return cls.build(1, [(1, [(1, 0)])])

    @classmethod
    def constant(cls, value: complex = 1, arity: int = 1) -> 'StarPolynomial':
        return cls.build(arity, [(value, [(0, 0)] * arity)])

    @classmethod
    def monomial(cls, exponents: Sequence[Sequence[int]], coef: complex = 1) -> 'StarPolynomial':
        return cls.build(len(exponents), [(coef, exponents)])

    @classmethod
    def product(cls, arity: int = 2) -> 'StarPolynomial':
        """z_1 · z_2 ⋯ z_j"""
        return cls.monomial([(1, 0)] * arity)

    @classmethod
    def correlation(cls, power: int = 1) -> 'StarPolynomial':
        """z_1^l · conj(z_2)^l"""
        return cls.monomial([(power, 0), (0, power)])

    @classmethod
    def indicator_pattern(cls, keep_flags: Sequence[bool]) -> 'StarPolynomial':
        """Π p_{ε_i}(z_i)，p_1(x) = x、p_0(x) = 1 − x；在 [0,1]^j 上以 1 為界"""
        arity = len(keep_flags)
        terms = []
        complement_slots = [i for i, keep in enumerate(keep_flags) if not keep]
        for chosen in product((False, True), repeat=len(complement_slots)):
            exps = [[1, 0] if keep else [0, 0] for keep in keep_flags]
            coef = 1
            for slot, take_z in zip(complement_slots, chosen):
                if take_z:
                    exps[slot] = [1, 0]
                    coef = -coef
            terms.append((coef, exps))
        return cls.build(arity, terms, sup_bound=1.0)

    # ------------------------------------------------------------
    # 求值
    # ------------------------------------------------------------
    def evaluate(self, *slots: np.ndarray) -> np.ndarray:
        if len(slots) != self.arity:
            raise ValueError(f"需要 {self.arity} 個引數，收到 {len(slots)}")
        slots = [np.asarray(z, dtype=complex) for z in slots]
        shape = np.broadcast_shapes(*(z.shape for z in slots))
        total = np.zeros(shape, dtype=complex)
        for coef, exps in self.terms:
            term = np.full(shape, coef, dtype=complex)
            for z, (a, b) in zip(slots, exps):
                if a:
                    term = term * z ** a
                if b:
                    term = term * np.conj(z) ** b
            total += term
        return total

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def check_bound(self, domain: Domain, grid_size: int = 12, max_points: int = 200_000) -> bool:
        """在定義域取樣格點的乘積上檢查 |p| ≤ sup_bound"""
        grid = domain.sample_grid(grid_size)
        per_slot = max(2, int(max_points ** (1.0 / self.arity)))
        if len(grid) > per_slot:
            grid = grid[np.linspace(0, len(grid) - 1, per_slot).astype(int)]
        mesh = np.meshgrid(*([grid] * self.arity), indexing='ij')
        values = np.abs(self.evaluate(*[m.ravel() for m in mesh]))
        return bool(values.max(initial=0.0) <= self.sup_bound + 1e-9)

    def to_json(self) -> dict:
        return {
            'arity': self.arity,
            'terms': [{'coef': [c.real, c.imag], 'exponents': [list(e) for e in exps]} for c, exps in self.terms],
            'sup_bound': self.sup_bound
        }

    @classmethod
    def from_json(cls, data: dict) -> 'StarPolynomial':
        terms = []
        for term in data['terms']:
            coef = term.get('coef', 1)
            if isinstance(coef, (list, tuple)):
                coef = complex(coef[0], coef[1])
            terms.append((coef, term['exponents']))
        arity = data.get('arity') or len(terms[0][1])
        return cls.build(arity, terms, sup_bound=data.get('sup_bound'))


@dataclass(frozen=True)
class CorrelationEntry:
    """一組平移 (h_1..h_j)、多項式 p 與目標值 γ"""
    shifts: Tuple[LatticePoint, ...]
    poly: StarPolynomial
    target: Optional[complex] = None
    distinct: bool = False
    label: str = ''

    def __post_init__(self):
        if len(self.shifts) != self.poly.arity:
            raise ValueError(f"平移數 {len(self.shifts)} 與多項式元數 {self.poly.arity} 不符")
        dims = {len(h) for h in self.shifts}
        if len(dims) != 1:
            raise ValueError(f"平移維度不一致: {self.shifts}")
        if self.distinct and len(set(self.shifts)) != len(self.shifts):
            raise ValueError(f"distinct 模式下平移必須兩兩相異: {self.shifts}")

    @classmethod
    def make(cls, shifts: Sequence, poly: StarPolynomial, target: Optional[complex] = None,
             distinct: bool = False, label: str = '') -> 'CorrelationEntry':
        return cls(tuple(as_point(h) for h in shifts), poly,
                   None if target is None else complex(target), distinct, label)

    @property
    def dim(self) -> int:
        return len(self.shifts[0])

    def shift_array(self) -> np.ndarray:
        return np.array(self.shifts, dtype=np.int64)

    def with_target(self, target: complex) -> 'CorrelationEntry':
        return CorrelationEntry(self.shifts, self.poly, complex(target), self.distinct, self.label)

    def to_json(self) -> dict:
        data = {'shifts': [list(h) for h in self.shifts], 'poly': self.poly.to_json()}
        if self.target is not None:
            data['target'] = [self.target.real, self.target.imag]
        if self.distinct:
            data['distinct'] = True
        if self.label:
            data['label'] = self.label
        return data

    @classmethod
    def from_json(cls, data: dict) -> 'CorrelationEntry':
        target = data.get('target')
        if isinstance(target, (list, tuple)):
            target = complex(target[0], target[1])
        shifts = [as_point(h) for h in data['shifts']]
        return cls.make(shifts, StarPolynomial.from_json(data['poly']), target,
                        data.get('distinct', False), data.get('label', ''))


@dataclass(frozen=True)
class CorrelationSpec:
    """相關規格：一串 CorrelationEntry"""
    entries: Tuple[CorrelationEntry, ...]

    def __post_init__(self):
        if not self.entries:
            raise ValueError("相關規格至少需要一個條目")
        dims = {e.dim for e in self.entries}
        if len(dims) != 1:
            raise ValueError(f"條目維度不一致: {dims}")

    @property
    def dim(self) -> int:
        return self.entries[0].dim

    @property
    def sup_bound(self) -> float:
        return max(e.poly.sup_bound for e in self.entries)

    def has_targets(self) -> bool:
        return all(e.target is not None for e in self.entries)

    def targets(self) -> List[complex]:
        return [e.target for e in self.entries]

    def shift_set(self) -> FiniteLatticeSet:
        """所有平移與原點的聯集"""
        pts = [h for e in self.entries for h in e.shifts] + [(0,) * self.dim]
        return FiniteLatticeSet.from_points(pts, dim=self.dim)

    def entry_shift_sets(self) -> List[FiniteLatticeSet]:
        return [FiniteLatticeSet.from_points(list(e.shifts) + [(0,) * self.dim], dim=self.dim)
                for e in self.entries]

    def with_targets(self, targets: Sequence[complex]) -> 'CorrelationSpec':
        return CorrelationSpec(tuple(e.with_target(t) for e, t in zip(self.entries, targets)))

    def to_json(self) -> dict:
        return {'entries': [e.to_json() for e in self.entries]}

    @classmethod
    def from_json(cls, data: dict) -> 'CorrelationSpec':
        return cls(tuple(CorrelationEntry.from_json(e) for e in data['entries']))


# ================================================================
# 平均運算
# ================================================================

def _slot_values(w: SequenceWindow, shift: LatticePoint, F: Region) -> np.ndarray:
    if isinstance(F, LatticeBox):
        return w.slice_box(F.translate(shift))
    return w.gather(F.array + np.asarray(shift, dtype=np.int64))


def _region_size(F: Region) -> int:
    return F.size if isinstance(F, LatticeBox) else len(F)


def cesaro_correlation(w: SequenceWindow, e: CorrelationEntry, F: Region) -> complex:
    """(1/|F|) Σ_{g∈F} p(z_{h_1+g}, …, z_{h_j+g})"""
    if _region_size(F) == 0:
        raise ValueError("F 不可為空集合")
    slots = [_slot_values(w, h, F) for h in e.shifts]
    # np.mean 使用成對求和，分割方式固定時結果逐位元穩定
    return complex(np.mean(e.poly.evaluate(*slots)))


def window_average(w: SequenceWindow, F: Region) -> complex:
    """(1/|F|) Σ_{g∈F} z_g"""
    entry = CorrelationEntry.make([(0,) * w.dim], StarPolynomial.identity())
    return cesaro_correlation(w, entry, F)


def correlation_trace(w: SequenceWindow, e: CorrelationEntry, plan: FolnerPlan,
                      indices: Sequence[int]) -> List[Tuple[int, complex]]:
    """沿 Følner 指標列出 (N, 平均值)"""
    return [(n, cesaro_correlation(w, e, plan.box(n))) for n in indices]


@dataclass
class WeylReport:
    """Weyl 均勻分佈檢定報告"""
    passed: bool
    worst_l: int
    worst_value: float
    first_failure_l: Optional[int]
    values: List[float]
    tol: float
    n_points: int

    def to_dict(self) -> dict:
        return {
            'statistic': 'weyl_power_sums',
            'pass': self.passed,
            'worst_l': self.worst_l,
            'worst_value': self.worst_value,
            'first_failure_l': self.first_failure_l,
            'values': self.values,
            'tol': self.tol,
            'F_size': self.n_points
        }


def weyl_ud_test(w: SequenceWindow, l_max: int, F: Region, tol: float) -> WeylReport:
    """對 1 ≤ l ≤ L_max 檢查 |(1/|F|) Σ z_g^l| ≤ tol"""
    if w.domain.tag != DomainTag.CIRCLE:
        raise DomainError(f"Weyl 檢定需要單位圓視窗，收到 {w.domain.tag.value}")
    if l_max < 1:
        raise ValueError("L_max 必須 ≥ 1")
    base = _slot_values(w, (0,) * w.dim, F)
    values = [float(abs(np.mean(base ** l))) for l in range(1, l_max + 1)]
    worst = max(values)
    worst_l = values.index(worst) + 1
    failures = [l for l, v in enumerate(values, 1) if v > tol]
    return WeylReport(
        passed=not failures,
        worst_l=worst_l,
        worst_value=worst,
        first_failure_l=failures[0] if failures else None,
        values=values,
        tol=tol,
        n_points=_region_size(F)
    )


def _indicator_on(A: FiniteLatticeSet, universe: LatticeBox) -> np.ndarray:
    if len(A) and not universe.contains_points(A.array).all():
        raise CoverageError(f"集合 A 不在宇集 {universe} 內")
    return SequenceWindow.from_set(A, universe).values.real


def set_density(A: FiniteLatticeSet, shifts: Sequence[Tuple[Sequence[int], bool]], F: Region,
                universe: Optional[LatticeBox] = None) -> float:
    """
    |F ∩ ∩_i (A − h_i)^{ε_i}| / |F|

    ε = True 保留集合，ε = False 取在宇集內的補集；宇集預設為 ∪(h_i + F) 的外框
    """
    if not shifts:
        raise ValueError("至少需要一個平移")
    points = [as_point(h, A.dim) for h, _ in shifts]
    if universe is None:
        base = F if isinstance(F, LatticeBox) else F.bounding_box()
        universe = base.expand(np.array(points))
    window = SequenceWindow(universe, _indicator_on(A, universe), Domain.binary(), validate=False)
    entry = CorrelationEntry.make(points, StarPolynomial.indicator_pattern([keep for _, keep in shifts]))
    return float(cesaro_correlation(window, entry, F).real)


def union_density(A: FiniteLatticeSet, shifts: Sequence[Sequence[int]], F: Region,
                  universe: Optional[LatticeBox] = None) -> float:
    """|F ∩ ∪_i (A − h_i)| / |F| = 1 − 補集交集的密度"""
    return 1.0 - set_density(A, [(h, False) for h in shifts], F, universe)


def set_density_trace(A: FiniteLatticeSet, shifts: Sequence[Tuple[Sequence[int], bool]],
                      plan: FolnerPlan, indices: Sequence[int],
                      universe: Optional[LatticeBox] = None) -> List[Tuple[int, float]]:
    return [(n, set_density(A, shifts, plan.box(n), universe)) for n in indices]


def banach_density_estimate(A: FiniteLatticeSet, window: LatticeBox, L: int) -> float:
    """視窗內所有邊長 L 的子方塊中 |A ∩ B| / |B| 的最大值（累加表）"""
    if L < 1 or L > min(window.shape):
        raise ValueError(f"子視窗邊長 {L} 必須介於 1 與視窗邊長 {min(window.shape)}")
    inside = A.filter(window.contains_points)
    indicator = SequenceWindow.from_set(inside, window).values.real
    table = indicator
    for axis in range(window.dim):
        table = np.cumsum(table, axis=axis)
    table = np.pad(table, [(1, 0)] * window.dim)
    counts = np.zeros(tuple(s - L + 1 for s in window.shape))
    for corner in product((0, 1), repeat=window.dim):
        idx = tuple(slice(L, None) if c else slice(0, s - L + 1) for c, s in zip(corner, window.shape))
        sign = (-1) ** (window.dim - sum(corner))
        counts += sign * table[idx]
    return float(counts.max() / L ** window.dim)


def limsup_over_H(values: Union[Mapping, Sequence[float]], truncation: int) -> float:
    """有限代理值：min_{k ≤ truncation} max(values[k:])"""
    seq = list(values.values()) if isinstance(values, Mapping) else list(values)
    if not seq:
        raise ValueError("values 不可為空")
    if truncation < 0 or truncation >= len(seq):
        raise ValueError(f"截斷長度 {truncation} 必須小於項數 {len(seq)}")
    tail_max = np.maximum.accumulate(np.asarray(seq, dtype=float)[::-1])[::-1]
    return float(tail_max[:truncation + 1].min())


@dataclass
class NiceVdcReport:
    """|avg z|² 與 limsup_h |avg z_{g+h} conj z_g| 的比較"""
    mean_square: float
    limsup: float
    truncation: int
    correlations: Dict[LatticePoint, float] = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.mean_square <= self.limsup + 1e-12

    def to_dict(self) -> dict:
        return {
            'statistic': 'nice_vdc',
            'mean_square': self.mean_square,
            'limsup': self.limsup,
            'truncation': self.truncation,
            'holds': self.holds,
            'correlations': {str(h): v for h, v in self.correlations.items()}
        }


def nice_vdc_statistic(w: SequenceWindow, H: Sequence[Sequence[int]], F: Region,
                       truncation: int) -> NiceVdcReport:
    """在視窗上比較平均值平方與沿 H 的相關 limsup 代理值"""
    zero = (0,) * w.dim
    mean = window_average(w, F)
    correlations = {}
    for h in H:
        h = as_point(h, w.dim)
        entry = CorrelationEntry.make([h, zero], StarPolynomial.correlation())
        correlations[h] = abs(cesaro_correlation(w, entry, F))
    return NiceVdcReport(
        mean_square=abs(mean) ** 2,
        limsup=limsup_over_H(correlations, truncation),
        truncation=truncation,
        correlations=correlations
    )


# ================================================================
# 見證序列束
# ================================================================

@dataclass(frozen=True)
class WitnessBundle:
    """K 條定義在共同區域上的見證視窗；統計量在 region 上平均"""
    windows: Tuple[SequenceWindow, ...]
    region: LatticeBox
    provenance: str = ''

    def __post_init__(self):
        if not self.windows:
            raise ValueError("見證束至少需要一條序列")
        first = self.windows[0]
        for w in self.windows[1:]:
            if w.box != first.box or w.domain != first.domain:
                raise ValueError("見證序列必須共用區域與定義域")
        if not first.box.contains_box(self.region):
            raise CoverageError(f"見證視窗 {first.box} 未涵蓋區域 {self.region}")

    @property
    def K(self) -> int:
        return len(self.windows)

    @property
    def domain(self) -> Domain:
        return self.windows[0].domain

    def statistic(self, e: CorrelationEntry) -> complex:
        """(1/(K|A|)) Σ_k Σ_{a∈A} p(z_{a+h_1,k}, …)"""
        return complex(np.mean([cesaro_correlation(w, e, self.region) for w in self.windows]))

    def discrepancy(self, spec: CorrelationSpec) -> float:
        if not spec.has_targets():
            raise ValueError("計算偏差需要所有條目都有目標值")
        return max(abs(e.target - self.statistic(e)) for e in spec.entries)
