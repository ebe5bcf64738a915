#!/usr/bin/env python3
"""
對應原理模組
有限保測系統、有限見證、由見證合成序列，以及逆 Furstenberg 對應（含補集、聯集與 ℕ 作用）
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config.lab_config import LabConfig
from core.averaging import (
    CorrelationEntry,
    CorrelationSpec,
    SequenceWindow,
    StarPolynomial,
    WitnessBundle,
    cesaro_correlation,
    set_density,
    union_density,
)
from core.domains import Domain
from core.errors import DomainError, RationalizationError, ScheduleError, WitnessError
from core.lattice_group import (
    FiniteLatticeSet,
    FolnerPlan,
    LatticeBox,
    LatticePoint,
    as_point,
    invariance_ratio,
)
from core.randomization import BernoulliWitnessSource, SeededRng
from core.tiling_engine import (
    CongruentFamily,
    TilePartition,
    assemble_blocks,
    balance_tiles,
    congruent_partition,
    dyadic_tiling,
)

logger = logging.getLogger(__name__)


# ================================================================
# 有限保測系統
# ================================================================

def _perm_power(perm: np.ndarray, k: int) -> np.ndarray:
    """置換的 k 次冪（k 可為負）"""
    if k < 0:
        perm = np.argsort(perm)
        k = -k
    result = np.arange(len(perm))
    base = perm
    while k:
        if k & 1:
            result = base[result]
        base = base[base]
        k >>= 1
    return result


class FiniteMPS:
    """
    有限機率空間上的保測 Z^d 作用與有界觀測量 f

    generators[i] 是 T_{e_i} 的置換陣列，T_{e_i} x = generators[i][x]。
    """

    def __init__(self, weights: Sequence[float], generators: Sequence[Sequence[int]],
                 observable: Sequence[complex], names: Optional[Sequence[str]] = None,
                 tol: Optional[float] = None):
        tol = LabConfig.WEIGHT_TOLERANCE if tol is None else tol
        self.weights = np.asarray(weights, dtype=float)
        self.generators = tuple(np.asarray(g, dtype=np.int64) for g in generators)
        self.observable = np.asarray(observable, dtype=complex)
        self.names = list(names) if names is not None else [str(i) for i in range(len(self.weights))]
        self._validate(tol)

    def _validate(self, tol: float):
        n = len(self.weights)
        if n == 0:
            raise ValueError("狀態空間不可為空")
        if not self.generators or len(self.generators) > 3:
            raise ValueError(f"生成元個數必須介於 1 與 3，收到 {len(self.generators)}")
        if len(self.observable) != n or len(self.names) != n:
            raise ValueError("觀測量與狀態數不符")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > tol:
            raise ValueError(f"權重必須非負且總和為 1，目前總和 {self.weights.sum():.15g}")
        for i, g in enumerate(self.generators):
            if g.shape != (n,) or not np.array_equal(np.sort(g), np.arange(n)):
                raise ValueError(f"第 {i} 個生成元不是狀態的置換")
            if not np.array_equal(self.weights[g], self.weights):
                raise ValueError(f"第 {i} 個生成元不保持權重")
        for i, a in enumerate(self.generators):
            for j, b in enumerate(self.generators[i + 1:], start=i + 1):
                if not np.array_equal(a[b], b[a]):
                    raise ValueError(f"生成元 {i} 與 {j} 不交換")

    # ------------------------------------------------------------
    # 常用系統
    # ------------------------------------------------------------
    @classmethod
    def rotation(cls, q: int, dim: int = 1, observable: Optional[Sequence[complex]] = None) -> 'FiniteMPS':
        """Z_q^d 上的平移；預設觀測量為狀態 0 的指示函數"""
        shape = (q,) * dim
        n = q ** dim
        coords = np.indices(shape).reshape(dim, -1)
        generators = []
        for axis in range(dim):
            moved = coords.copy()
            moved[axis] = (moved[axis] + 1) % q
            generators.append(np.ravel_multi_index(tuple(moved), shape))
        if observable is None:
            observable = np.zeros(n)
            observable[0] = 1.0
        names = [','.join(str(c) for c in coords[:, i]) for i in range(n)]
        return cls(np.full(n, 1.0 / n), generators, observable, names)

    @classmethod
    def identity(cls, weights: Sequence[float], observable: Sequence[complex], dim: int = 1) -> 'FiniteMPS':
        n = len(weights)
        return cls(weights, [np.arange(n)] * dim, observable)

    @property
    def dim(self) -> int:
        return len(self.generators)

    @property
    def n_states(self) -> int:
        return len(self.weights)

    @property
    def bound(self) -> float:
        return float(np.abs(self.observable).max())

    def domain(self) -> Domain:
        return Domain.infer(self.observable)

    def is_indicator(self) -> bool:
        return bool(np.all((self.observable == 0) | (self.observable == 1)))

    def with_observable(self, observable: Sequence[complex]) -> 'FiniteMPS':
        return FiniteMPS(self.weights, self.generators, observable, self.names)

    def act(self, h: Sequence[int]) -> np.ndarray:
        """T_h 的置換陣列"""
        h = as_point(h, self.dim)
        result = np.arange(self.n_states)
        for gen, k in zip(self.generators, h):
            result = _perm_power(gen, k)[result]
        return result

    def integrate(self, phi: np.ndarray) -> complex:
        return complex(np.dot(self.weights, phi))

    def orbit_table(self, box: LatticeBox) -> np.ndarray:
        """形狀 (n_states, *box.shape) 的 f(T_a x)"""
        per_axis = []
        for axis, gen in enumerate(self.generators):
            start = _perm_power(gen, box.origin[axis])
            rows = [start]
            for _ in range(box.shape[axis] - 1):
                rows.append(gen[rows[-1]])
            per_axis.append(np.array(rows, dtype=np.int64) if rows else np.zeros((0, self.n_states), np.int64))
        # comp[t_0, …, t_{d-1}, x] = T_{origin + t} x
        comp = per_axis[-1]
        for axis in range(self.dim - 2, -1, -1):
            idx = np.arange(box.shape[axis]).reshape((-1,) + (1,) * comp.ndim)
            comp = per_axis[axis][idx, comp[None, ...]]
        table = self.observable[comp]
        return np.moveaxis(table, -1, 0)

    def to_json(self) -> dict:
        return {
            'weights': self.weights.tolist(),
            'generators': [g.tolist() for g in self.generators],
            'observable': [[z.real, z.imag] for z in self.observable],
            'names': self.names
        }

    @classmethod
    def from_json(cls, data: dict) -> 'FiniteMPS':
        observable = [complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v)
                      for v in data['observable']]
        weights = data['weights']
        if any(isinstance(w, str) for w in weights):
            weights = [float(Fraction(w)) for w in weights]
        return cls(weights, data['generators'], observable, data.get('names'))

    def __repr__(self) -> str:
        return f"FiniteMPS(states={self.n_states}, dim={self.dim})"


def mps_correlation(m: FiniteMPS, e: CorrelationEntry) -> complex:
    """Σ_x w(x) · p(f(T_{h_1} x), …, f(T_{h_j} x))"""
    slots = [m.observable[m.act(h)] for h in e.shifts]
    return m.integrate(e.poly.evaluate(*slots))


def product_mps(m1: FiniteMPS, m2: FiniteMPS) -> FiniteMPS:
    """乘積空間、乘積權重、對角作用與觀測量 f_1(x_1)·f_2(x_2)"""
    if m1.dim != m2.dim:
        raise ValueError(f"維度不符: {m1.dim} vs {m2.dim}")
    n2 = m2.n_states
    weights = np.outer(m1.weights, m2.weights).ravel()
    generators = [(g1[:, None] * n2 + g2[None, :]).ravel() for g1, g2 in zip(m1.generators, m2.generators)]
    observable = np.outer(m1.observable, m2.observable).ravel()
    names = [f"({a},{b})" for a in m1.names for b in m2.names]
    return FiniteMPS(weights, generators, observable, names)


def duplicate_real_imag(m: FiniteMPS) -> FiniteMPS:
    """
    X × {0,1} 上權重 w/2 的雙份系統，F(x,0) = Re f(x)、F(x,1) = Im f(x)
    滿足 ∫ F(S_h y) F(y) dν = ½ Re ∫ f(T_h x) conj f(x) dμ
    """
    n = m.n_states
    weights = np.concatenate([m.weights, m.weights]) / 2
    generators = [np.concatenate([g, g + n]) for g in m.generators]
    observable = np.concatenate([m.observable.real, m.observable.imag]).astype(complex)
    names = [f"{x}/re" for x in m.names] + [f"{x}/im" for x in m.names]
    return FiniteMPS(weights, generators, observable, names)


@dataclass(frozen=True)
class IidSpec:
    """獨立 Bernoulli(p) 乘積系統，只以其相關公式表示"""
    p: float
    dim: int = 1

    def __post_init__(self):
        if not 0 <= self.p <= 1:
            raise ValueError(f"p 必須介於 0 與 1，收到 {self.p}")

    def correlation(self, e: CorrelationEntry) -> complex:
        """列舉相異平移上的 {0,1} 取值計算 E p(x_{h_1}, …)"""
        distinct = sorted(set(e.shifts))
        position = {h: i for i, h in enumerate(distinct)}
        total = 0j
        for bits in product((0, 1), repeat=len(distinct)):
            ones = sum(bits)
            prob = self.p ** ones * (1 - self.p) ** (len(bits) - ones)
            if prob == 0:
                continue
            slots = [np.array([bits[position[h]]], dtype=complex) for h in e.shifts]
            total += prob * complex(e.poly.evaluate(*slots)[0])
        return total

    def family_measure(self, family: Sequence[Tuple[Sequence[int], bool]]) -> float:
        """μ(∩ T_h B^{ε})：相同平移上衝突的 ε 給 0，否則為 p 與 1−p 的乘積"""
        flags: Dict[LatticePoint, bool] = {}
        for h, keep in family:
            h = as_point(h, self.dim)
            if h in flags and flags[h] != keep:
                return 0.0
            flags[h] = keep
        return float(np.prod([self.p if keep else 1 - self.p for keep in flags.values()]))

    def witness_source(self, copies: int = 4) -> BernoulliWitnessSource:
        return BernoulliWitnessSource(self.p, copies)


# ================================================================
# 有限見證
# ================================================================

def rationalize_weights(weights: np.ndarray, budget: float,
                        max_denominator: Optional[int] = None) -> Tuple[int, np.ndarray, float]:
    """
    找最小的 Q ≤ 上限，使最大餘數法得到的 c/Q 與權重的全變差 ≤ budget
    回傳 (Q, 各狀態份數, 全變差)
    """
    max_denominator = max_denominator or LabConfig.MAX_DENOMINATOR
    weights = np.asarray(weights, dtype=float)
    for Q in range(1, max_denominator + 1):
        scaled = weights * Q
        counts = np.floor(scaled).astype(np.int64)
        remainder = Q - counts.sum()
        if remainder > 0:
            order = np.argsort(-(scaled - counts), kind='stable')
            counts[order[:remainder]] += 1
        tv = float(np.abs(weights - counts / Q).sum())
        if tv <= budget:
            return Q, counts, tv
    raise RationalizationError(f"權重無法以分母 ≤ {max_denominator} 逼近到全變差 {budget:.3g}")


def _region_box(A: Union[LatticeBox, FiniteLatticeSet]) -> LatticeBox:
    if isinstance(A, LatticeBox):
        return A
    box = A.bounding_box()
    if box is None or box.size != len(A):
        raise ValueError("見證區域 A 必須是非空的軸對齊方塊")
    return box


def finitistic_witnesses(m: FiniteMPS, spec: CorrelationSpec, A: Union[LatticeBox, FiniteLatticeSet],
                         delta: float, max_denominator: Optional[int] = None) -> WitnessBundle:
    """
    把權重有理化為 K 個等權原子（份數正比於權重），每個原子 x 產生序列 z_a = f(T_a x)。
    見證統計量與 mps_correlation 的差距小於 δ。
    """
    if delta <= 0:
        raise ValueError("δ 必須為正")
    region = _region_box(A)
    if spec.dim != m.dim or region.dim != m.dim:
        raise ValueError("規格、區域與系統的維度必須一致")
    budget = delta / (2 * max(spec.sup_bound, 1e-12))
    Q, counts, tv = rationalize_weights(m.weights, budget, max_denominator)
    atoms = np.repeat(np.arange(m.n_states), counts)

    extent = region.expand(np.vstack([e.shift_array() for e in spec.entries]))
    table = m.orbit_table(extent)
    domain = m.domain()
    windows = tuple(SequenceWindow(extent, table[x], domain, validate=False) for x in atoms)
    bundle = WitnessBundle(windows, region, f"finite m.p.s. orbits (K={Q}, TV={tv:.3g})")

    targets = spec if spec.has_targets() else spec.with_targets([mps_correlation(m, e) for e in spec.entries])
    discrepancy = bundle.discrepancy(targets)
    if discrepancy >= delta:
        raise WitnessError(f"見證偏差 {discrepancy:.3g} 未小於 δ={delta:.3g}")
    logger.debug(f"見證: K={Q}, 偏差 {discrepancy:.3g}")
    return bundle


# ================================================================
# 序列合成
# ================================================================

WitnessSource = Union[FiniteMPS, Callable[[LatticeBox, LatticeBox, SeededRng], WitnessBundle]]


@dataclass
class SynthesisSchedule:
    """見證層級 j、區塊層級 k_1 < … 與每層容差 δ_L"""
    witness_level: int
    levels: Tuple[int, ...]
    deltas: Tuple[float, ...]
    thresholds: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if len(self.levels) != len(self.deltas) or not self.levels:
            raise ScheduleError("層級與容差數量必須相同且非空")
        if self.levels[0] <= self.witness_level:
            raise ScheduleError(f"區塊層級 {self.levels[0]} 必須大於見證層級 {self.witness_level}")
        if any(d <= 0 for d in self.deltas):
            raise ScheduleError("每層容差必須為正")

    def to_dict(self) -> dict:
        return {
            'witness_level': self.witness_level,
            'levels': list(self.levels),
            'deltas': list(self.deltas),
            'thresholds': list(self.thresholds) if self.thresholds else None
        }


def _ceil_log2(x: float) -> int:
    return max(0, math.ceil(math.log2(x))) if x > 1 else 0


def default_schedule(spec: CorrelationSpec, side_exponent: int, epsilon: float, copies: int,
                     random_source: bool = False, max_levels: int = 4) -> SynthesisSchedule:
    """
    見證層級 j 取最小的使各條目的 |∂_S A|/|A| ≤ ε/(10M)；隨機來源另需 K·|A| ≥ (3M/δ_min)²。
    區塊至少含 K 個子瓦片；K 不是 2 的冪時，丟棄比例須 ≤ ε/(10M)。
    δ_L = min(ε/5, 1/L)，不超過 ε/5 且隨 L 趨於 0。
    """
    dim = spec.dim
    M = max(spec.sup_bound, 1e-12)
    target_ratio = epsilon / (10 * M)
    shift_sets = spec.entry_shift_sets()

    j = 0
    while j < side_exponent and any(invariance_ratio(S, LatticeBox.cube(2 ** j, dim)) > target_ratio
                                    for S in shift_sets):
        j += 1
    if random_source:
        delta_min = epsilon / 5
        j = max(j, math.ceil(_ceil_log2((3 * M / delta_min) ** 2 / copies) / dim))

    g = max(1, math.ceil(_ceil_log2(copies) / dim))
    if copies & (copies - 1):
        while (copies - 1) / 2 ** (g * dim) > target_ratio and j + g < side_exponent:
            g += 1

    if j + g > side_exponent:
        reduced = max(0, side_exponent - g)
        logger.warning(f"⚠️ 視窗太小，見證層級由 {j} 降為 {reduced}")
        j = reduced
    if j + g > side_exponent:
        raise ScheduleError(f"視窗 2^{side_exponent} 容不下 {copies} 條見證的區塊")

    n_levels = min(max_levels, side_exponent - (j + g) + 1)
    levels = tuple(j + g + i for i in range(n_levels))
    deltas = tuple(min(epsilon / 5, 1 / L) for L in range(1, n_levels + 1))
    return SynthesisSchedule(witness_level=j, levels=levels, deltas=deltas)


@dataclass
class TraceRow:
    N: int
    entry: int
    value: complex
    target: complex

    @property
    def abs_err(self) -> float:
        return abs(self.value - self.target)

    def to_dict(self) -> dict:
        return {
            'N': self.N,
            'entry': self.entry,
            'value': [self.value.real, self.value.imag],
            'target': [self.target.real, self.target.imag],
            'abs_err': self.abs_err
        }


@dataclass
class SynthesisResult:
    """合成視窗、驗證軌跡與組合容差"""
    window: SequenceWindow
    trace: List[TraceRow]
    bound: float
    bound_parts: Dict[str, float]
    schedule: SynthesisSchedule
    horizon: int
    block_errors: Dict[int, float] = field(default_factory=dict)
    witness_counts: Dict[int, int] = field(default_factory=dict)
    partition_summary: Dict[str, int] = field(default_factory=dict)

    def errors_by_n(self) -> List[Tuple[int, float]]:
        by_n: Dict[int, float] = {}
        for row in self.trace:
            by_n[row.N] = max(by_n.get(row.N, 0.0), row.abs_err)
        return sorted(by_n.items())

    def envelope(self) -> List[Tuple[int, float]]:
        """最大誤差的後綴最大值包絡，隨 N 單調不增"""
        rows = self.errors_by_n()
        out = []
        running = 0.0
        for n, err in reversed(rows):
            running = max(running, err)
            out.append((n, running))
        return list(reversed(out))

    @property
    def final_error(self) -> float:
        return max((row.abs_err for row in self.trace if row.N == self.horizon), default=math.inf)

    @property
    def passed(self) -> bool:
        return self.final_error <= self.bound

    def to_dict(self) -> dict:
        return {
            'horizon': self.horizon,
            'final_error': self.final_error,
            'bound': self.bound,
            'bound_parts': self.bound_parts,
            'passed': self.passed,
            'schedule': self.schedule.to_dict(),
            'block_errors': {str(k): v for k, v in self.block_errors.items()},
            'witness_counts': {str(k): v for k, v in self.witness_counts.items()},
            'partition': self.partition_summary,
            'trace': [row.to_dict() for row in self.trace]
        }


def _source_copies(source: WitnessSource, spec: CorrelationSpec, epsilon: float,
                   max_denominator: Optional[int]) -> int:
    if isinstance(source, FiniteMPS):
        budget = (epsilon / 10) / (2 * max(spec.sup_bound, 1e-12))
        Q, _, _ = rationalize_weights(source.weights, budget, max_denominator)
        return Q
    return int(getattr(source, 'copies', 1))


def _build_block(source: WitnessSource, spec: CorrelationSpec, level: int, witness_level: int,
                 delta: float, fill: complex, domain: Optional[Domain], rng: SeededRng,
                 max_denominator: Optional[int], retries: int) -> Tuple[SequenceWindow, float, int]:
    """以第 j 層子瓦片依輪替指派見證，組成第 k 層區塊並驗證誤差 < δ"""
    dim = spec.dim
    shifts = np.vstack([e.shift_array() for e in spec.entries])
    region = LatticeBox.cube(2 ** witness_level, dim)
    extent = region.expand(shifts)
    shape_box = LatticeBox.cube(2 ** level, dim)
    block_box = shape_box.expand(shifts)
    sub_tiling = dyadic_tiling(witness_level, dim)
    sub_tiles = [sub_tiling.tile_at(idx) for idx in sub_tiling.tiles_meeting_box(shape_box)]

    attempts = 1 if isinstance(source, FiniteMPS) else max(1, retries)
    best_error = math.inf
    for attempt in range(attempts):
        if isinstance(source, FiniteMPS):
            bundle = finitistic_witnesses(source, spec, region, delta / 5, max_denominator)
        else:
            bundle = source(region, extent, rng.child(level, attempt))
        K = bundle.K
        kept, dropped = balance_tiles(sub_tiles, K)
        if not kept:
            raise ScheduleError(f"第 {level} 層區塊只有 {len(sub_tiles)} 個子瓦片，少於 K={K}")
        assignment = {tile: bundle.windows[i % K].restrict(region) for i, tile in enumerate(kept)}
        block_domain = domain or bundle.domain
        block = assemble_blocks(TilePartition(kept, dim), assignment, fill, block_box, block_domain)
        error = max(abs(e.target - cesaro_correlation(block, e, shape_box)) for e in spec.entries)
        best_error = min(best_error, error)
        if error < delta:
            if dropped:
                logger.info(f"⚠️ 第 {level} 層丟棄 {len(dropped)} 個子瓦片以平衡 K={K}")
            return block, error, K
        logger.debug(f"第 {level} 層第 {attempt + 1} 次嘗試誤差 {error:.4g} ≥ δ={delta:.4g}")

    raise WitnessError(f"第 {level} 層區塊誤差 {best_error:.4g} 無法低於 δ={delta:.4g}")


def dyadic_trace_indices(plan: FolnerPlan, horizon: int, start_exponent: int = 1) -> List[int]:
    """2 的冪次 Følner 指標加上 horizon"""
    indices = []
    a = max(0, start_exponent)
    while 2 ** a < horizon:
        indices.append(2 ** a)
        a += 1
    indices.append(horizon)
    return indices


def synthesize_sequence(spec: CorrelationSpec, witness_source: WitnessSource, horizon: int,
                        schedule: Optional[SynthesisSchedule] = None,
                        plan: Optional[FolnerPlan] = None,
                        epsilon: Optional[float] = None,
                        rng: Optional[SeededRng] = None,
                        fill: Optional[complex] = None,
                        max_denominator: Optional[int] = None) -> SynthesisResult:
    """
    由見證合成一條視窗序列，使其沿 F_N 的相關平均逼近各條目的目標 γ(l)

    每一層 L 先以見證組成區塊（誤差 < δ_L），再依 Følner 分割把區塊貼到各瓦片上；
    組合容差為 4·(ε/5) + ε/10 + ε/10 = ε。
    """
    epsilon = LabConfig.SYNTHESIS_EPSILON if epsilon is None else epsilon
    rng = rng or SeededRng(LabConfig.DEFAULT_SEED)
    plan = plan or FolnerPlan(dim=spec.dim)
    if plan.dim != spec.dim:
        raise ScheduleError(f"Følner 計畫維度 {plan.dim} 與規格維度 {spec.dim} 不符")

    if not spec.has_targets():
        if not isinstance(witness_source, FiniteMPS):
            raise ValueError("隨機見證來源需要規格中提供目標值")
        spec = spec.with_targets([mps_correlation(witness_source, e) for e in spec.entries])

    side = plan.side_of(horizon)
    side_exponent = int(math.floor(math.log2(side)))
    copies = _source_copies(witness_source, spec, epsilon, max_denominator)
    random_source = not isinstance(witness_source, FiniteMPS)
    if schedule is None:
        schedule = default_schedule(spec, side_exponent, epsilon, copies, random_source)
    if side % 2 ** max(schedule.levels):
        raise ScheduleError(f"side(horizon)={side} 不是最大瓦片邊長 2^{max(schedule.levels)} 的倍數")

    domain = None
    if isinstance(witness_source, FiniteMPS):
        domain = witness_source.domain()
    fill_value = fill

    blocks: Dict[int, SequenceWindow] = {}
    block_errors: Dict[int, float] = {}
    witness_counts: Dict[int, int] = {}
    for i, (level, delta) in enumerate(zip(schedule.levels, schedule.deltas), start=1):
        logger.info(f"[{i}/{len(schedule.levels)}] 建立第 {level} 層區塊 (δ={delta:.4g})")
        if fill_value is None:
            fill_value = (domain or _source_domain(witness_source, spec, rng)).default_fill()
        block, error, K = _build_block(witness_source, spec, level, schedule.witness_level, delta,
                                       fill_value, domain, rng.child(i),
                                       max_denominator, LabConfig.WITNESS_RETRIES)
        domain = domain or block.domain
        blocks[level] = block
        block_errors[level] = error
        witness_counts[level] = K

    family = CongruentFamily.dyadic(schedule.levels, spec.dim)
    partition = congruent_partition(family, plan, horizon, schedule.thresholds)
    shifts = np.vstack([e.shift_array() for e in spec.entries])
    out_box = plan.box(horizon).expand(shifts)
    window = assemble_blocks(partition, lambda tile: blocks[tile.level], fill_value, out_box, domain)

    trace = []
    for n in dyadic_trace_indices(plan, horizon, schedule.witness_level):
        F = plan.box(n)
        for idx, e in enumerate(spec.entries):
            trace.append(TraceRow(n, idx, cesaro_correlation(window, e, F), e.target))

    bound_parts = {'assembly': 4 * epsilon / 5, 'witness': epsilon / 10, 'slack': epsilon / 10}
    result = SynthesisResult(
        window=window,
        trace=trace,
        bound=sum(bound_parts.values()),
        bound_parts=bound_parts,
        schedule=schedule,
        horizon=horizon,
        block_errors=block_errors,
        witness_counts=witness_counts,
        partition_summary={str(k): v for k, v in partition.count_per_level().items()}
    )
    status = '✅' if result.passed else '❌'
    logger.info(f"{status} 合成完成: 最終誤差 {result.final_error:.4g} / 容差 {result.bound:.4g}")
    return result


def _source_domain(source, spec: CorrelationSpec, rng: SeededRng) -> Domain:
    """以一個最小見證束取得隨機來源的定義域"""
    box = LatticeBox.cube(1, spec.dim)
    return source(box, box, rng.child(-1)).domain


# ================================================================
# 逆 Furstenberg 對應
# ================================================================

Family = Sequence[Tuple[Sequence[int], bool]]


@dataclass
class DensityRow:
    """一個集合族的密度與目標測度"""
    family: List[Tuple[LatticePoint, bool]]
    density: float
    target: float
    kind: str = 'intersection'

    @property
    def deviation(self) -> float:
        return abs(self.density - self.target)

    def to_dict(self) -> dict:
        return {
            'kind': self.kind,
            'family': [{'shift': list(h), 'keep': keep} for h, keep in self.family],
            'density': self.density,
            'target': self.target,
            'deviation': self.deviation
        }


@dataclass
class IfcResult:
    """逆對應得到的集合 A 與密度報告"""
    A: FiniteLatticeSet
    rows: List[DensityRow]
    horizon: int
    plan: FolnerPlan
    universe: LatticeBox
    synthesis: Optional[SynthesisResult] = None

    @property
    def max_deviation(self) -> float:
        return max((row.deviation for row in self.rows), default=0.0)

    def passed(self, tol: Optional[float] = None) -> bool:
        tol = LabConfig.CASE_TOLERANCE if tol is None else tol
        return self.max_deviation <= tol

    def to_dict(self) -> dict:
        return {
            'horizon': self.horizon,
            'plan': self.plan.describe(),
            'set_size': len(self.A),
            'max_deviation': self.max_deviation,
            'rows': [row.to_dict() for row in self.rows]
        }


def _normalize_family(family: Family, dim: int) -> List[Tuple[LatticePoint, bool]]:
    return [(as_point(h, dim), bool(keep)) for h, keep in family]


def _family_target(source: Union[FiniteMPS, IidSpec], entry: CorrelationEntry,
                   family: List[Tuple[LatticePoint, bool]]) -> float:
    if isinstance(source, IidSpec):
        return source.family_measure(family)
    return float(mps_correlation(source, entry).real)


def inverse_furstenberg(source: Union[FiniteMPS, IidSpec], families: Sequence[Family], horizon: int,
                        unions: Sequence[Sequence[Sequence[int]]] = (),
                        plan: Optional[FolnerPlan] = None,
                        epsilon: Optional[float] = None,
                        rng: Optional[SeededRng] = None) -> IfcResult:
    """
    由指示觀測量的系統（或 iid 規格）構造 A，使 d(∩_i (A − h_i)^{ε_i}) 逼近 μ(∩_i T_{h_i}^{-1} B^{ε_i})

    p_1(x) = x、p_0(x) = 1 − x；g 被計入當且僅當 g + h ∈ A，對應 f(T_h x)。
    聯集族以補集交集的補數處理。
    """
    dim = source.dim
    if isinstance(source, FiniteMPS) and not source.is_indicator():
        raise DomainError("逆對應需要 {0,1} 值的觀測量")
    plan = plan or FolnerPlan(dim=dim)
    zero = (0,) * dim

    normalized = [_normalize_family(f, dim) for f in families]
    union_shifts = [[as_point(h, dim) for h in u] for u in unions]
    entries = [CorrelationEntry.make([zero], StarPolynomial.identity(), label='mean')]
    for fam in normalized:
        entries.append(CorrelationEntry.make([h for h, _ in fam],
                                             StarPolynomial.indicator_pattern([k for _, k in fam]),
                                             label='family'))
    for u in union_shifts:
        entries.append(CorrelationEntry.make(u, StarPolynomial.indicator_pattern([False] * len(u)),
                                             label='union-complement'))

    if isinstance(source, IidSpec):
        targets = [source.correlation(e) for e in entries]
        witness_source = source.witness_source()
    else:
        targets = [mps_correlation(source, e) for e in entries]
        witness_source = source
    spec = CorrelationSpec(tuple(entries)).with_targets(targets)

    if isinstance(source, FiniteMPS) and not np.any(source.observable):
        # B = ∅ 時 A = ∅
        universe = plan.box(horizon).expand(np.vstack([e.shift_array() for e in entries]))
        A = FiniteLatticeSet.empty(dim)
        synthesis = None
    else:
        synthesis = synthesize_sequence(spec, witness_source, horizon, plan=plan, epsilon=epsilon, rng=rng)
        universe = synthesis.window.box
        A = synthesis.window.support()

    F = plan.box(horizon)
    rows = []
    mean_family = [(zero, True)]
    rows.append(DensityRow(mean_family, set_density(A, mean_family, F, universe),
                           float(targets[0].real), 'mean'))
    for fam, entry in zip(normalized, entries[1:1 + len(normalized)]):
        rows.append(DensityRow(fam, set_density(A, fam, F, universe),
                               _family_target(source, entry, fam)))
    for u, entry in zip(union_shifts, entries[1 + len(normalized):]):
        complement = [(h, False) for h in u]
        target = 1.0 - _family_target(source, entry, complement)
        rows.append(DensityRow([(h, True) for h in u], union_density(A, u, F, universe), target, 'union'))

    result = IfcResult(A=A, rows=rows, horizon=horizon, plan=plan, universe=universe, synthesis=synthesis)
    logger.info(f"逆對應完成: |A|={len(A)}, 最大偏差 {result.max_deviation:.4g}")
    return result


def union_ifc(source: Union[FiniteMPS, IidSpec], unions: Sequence[Sequence[Sequence[int]]], horizon: int,
              **kwargs) -> IfcResult:
    """只含聯集族的逆對應"""
    return inverse_furstenberg(source, [], horizon, unions=unions, **kwargs)


def semigroup_ifc(m: Union[FiniteMPS, IidSpec], families: Sequence[Family], horizon: int,
                  epsilon: Optional[float] = None, rng: Optional[SeededRng] = None) -> IfcResult:
    """
    ℕ 作用版本：在 Z 上執行逆對應後與 ℕ 取交集，密度沿 F_N = {1..N} 計算
    回傳的 A 只保留 {1..N} 內的格點
    平移必須為非負整數
    """
    if m.dim != 1:
        raise ValueError("ℕ 作用只支援一維系統")
    for fam in families:
        for h, _ in fam:
            if as_point(h, 1)[0] < 0:
                raise ValueError(f"ℕ 作用的平移必須非負，收到 {h}")
    plan = FolnerPlan(dim=1, style='positive')
    result = inverse_furstenberg(m, families, horizon, plan=plan, epsilon=epsilon, rng=rng)
    naturals = LatticeBox.from_bounds((1,), (horizon + 1,))
    result.A = result.A.filter(naturals.contains_points)
    return result


# ================================================================
# 常用建構子
# ================================================================

def rotation_mps(q: int, dim: int = 1, observable: Optional[Sequence[complex]] = None) -> FiniteMPS:
    return FiniteMPS.rotation(q, dim, observable)


def identity_mps(weights: Sequence[float], observable: Sequence[complex], dim: int = 1) -> FiniteMPS:
    return FiniteMPS.identity(weights, observable, dim)


def bernoulli_iid(p: float, dim: int = 1) -> IidSpec:
    return IidSpec(p, dim)
