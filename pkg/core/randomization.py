#!/usr/bin/env python3
"""
隨機化模組
偏置圓周取樣、把圓盤見證提升為圓周見證、序列凸化、白噪聲與隨機見證來源
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from config.lab_config import LabConfig
from core.averaging import (
    CorrelationEntry,
    SequenceWindow,
    StarPolynomial,
    WitnessBundle,
)
from core.domains import Domain, collinear_frame
from core.errors import ConvergenceError, DomainError, GeometryError, SolverError, WitnessError
from core.lattice_group import LatticeBox, LatticePoint, as_point
from core.simplex import DenseSimplex

logger = logging.getLogger(__name__)


_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _zigzag(value: int) -> int:
    """把帶號整數映成非負整數，供 SeedSequence 的 spawn_key 使用"""
    return 2 * value if value >= 0 else -2 * value - 1


def _mix64(h: np.ndarray) -> np.ndarray:
    """SplitMix64 的收尾混合，uint64 上的雙射"""
    h = (h ^ (h >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    h = (h ^ (h >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return h ^ (h >> np.uint64(31))


@dataclass(frozen=True)
class SeededRng:
    """
    (seed, stream) 決定的 PCG64 亂數流；相同輸入在任何平台產生相同序列。
    逐格點抽樣用 site_uniforms：每個格點的亂數只由 (seed, stream, 座標, 第幾次抽取) 決定，
    與視窗範圍及計算次序無關。
    """
    seed: int
    stream: Tuple[int, ...] = ()

    ALGORITHM = 'PCG64'

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=self.stream)))

    def child(self, *keys: int) -> 'SeededRng':
        return SeededRng(self.seed, self.stream + tuple(_zigzag(int(k)) for k in keys))

    def for_site(self, point: Sequence[int]) -> 'SeededRng':
        return self.child(*as_point(point))

    def site_uniforms(self, points: np.ndarray, draw: int = 0) -> np.ndarray:
        """每個格點 (n, d) 的第 draw 個 [0, 1) 均勻亂數"""
        points = np.asarray(points, dtype=np.int64)
        if points.ndim != 2:
            raise ValueError(f"格點陣列必須是 (n, d)，收到形狀 {points.shape}")
        key = np.random.SeedSequence(self.seed, spawn_key=self.stream).generate_state(1, np.uint64)[0]
        with np.errstate(over='ignore'):
            h = np.full(len(points), key, dtype=np.uint64)
            for axis in range(points.shape[1]):
                c = points[:, axis]
                z = np.where(c >= 0, 2 * c, -2 * c - 1).astype(np.uint64)
                salt = np.uint64(((axis + 1) * _GOLDEN) & _MASK64)
                h = _mix64(h + _mix64(z * np.uint64(_GOLDEN) + salt))
            h = _mix64(h + np.uint64(((draw + 1) * _GOLDEN) & _MASK64))
        return (h >> np.uint64(11)).astype(np.float64) * 2.0 ** -53

    def to_json(self) -> dict:
        return {'seed': self.seed, 'stream': list(self.stream), 'algorithm': self.ALGORITHM}


# ================================================================
# 偏置圓周取樣
# ================================================================

@dataclass
class CircleSample:
    """拒絕取樣結果與統計"""
    values: np.ndarray
    proposals: int
    envelope: float

    @property
    def acceptance(self) -> float:
        return len(self.values) / self.proposals if self.proposals else 0.0

    def to_dict(self) -> dict:
        return {
            'draws': int(len(self.values)),
            'proposals': int(self.proposals),
            'envelope': self.envelope,
            'acceptance': self.acceptance
        }


def _biased_draws(w: np.ndarray, points: np.ndarray, rng: SeededRng) -> Tuple[np.ndarray, int]:
    """對每個位置 w 抽一個密度為 1 + Re(z·conj w) 的單位複數；第 r 輪提議用該格點的第 2r、2r+1 次抽取"""
    w = np.asarray(w, dtype=complex).ravel()
    points = np.asarray(points, dtype=np.int64)
    if points.ndim == 1:
        points = points[:, None]
    out = np.empty(len(w), dtype=complex)
    pending = np.arange(len(w))
    proposals = 0
    rounds = 0
    while len(pending):
        theta = rng.site_uniforms(points[pending], 2 * rounds)
        u = rng.site_uniforms(points[pending], 2 * rounds + 1)
        z = np.exp(2j * np.pi * theta)
        target = pending
        envelope = 1.0 + np.abs(w[target])
        accept = u * envelope < 1.0 + (z * np.conj(w[target])).real
        out[target[accept]] = z[accept]
        proposals += len(pending)
        pending = target[~accept]
        rounds += 1
    return out, proposals


def sample_biased_circle(w: complex, rng: SeededRng, size: int = 1) -> CircleSample:
    """
    以包絡 1 + |w| 的拒絕取樣，從相對於均勻分佈的密度 1 + Re(z·conj w) 抽取單位複數。
    此分佈滿足 E z = w/2，且 |n| ≥ 2 時 E z^n = 0。
    """
    w = complex(w)
    if abs(w) > 1 + 1e-12:
        raise DomainError(f"|w| 必須 ≤ 1，收到 {abs(w):.6g}")
    values, proposals = _biased_draws(np.full(size, w), np.arange(size)[:, None], rng)
    return CircleSample(values=values, proposals=proposals, envelope=1.0 + abs(w))


# ================================================================
# 提升見證到單位圓
# ================================================================

@dataclass
class LiftResult:
    """提升後的見證束與檢驗統計"""
    bundle: WitnessBundle
    copies: int
    mean_statistic: complex
    mean_target: float
    correlations: Dict[str, float] = field(default_factory=dict)
    delta: float = 0.0
    samples: int = 0

    @property
    def max_correlation(self) -> float:
        return max(self.correlations.values(), default=0.0)

    def passed(self) -> bool:
        return abs(self.mean_statistic - self.mean_target) <= self.delta and self.max_correlation <= self.delta

    def to_dict(self) -> dict:
        return {
            'copies': self.copies,
            'J': self.bundle.K,
            'mean_statistic': [self.mean_statistic.real, self.mean_statistic.imag],
            'mean_target': self.mean_target,
            'max_correlation': self.max_correlation,
            'correlations': self.correlations,
            'delta': self.delta,
            'samples': self.samples
        }


def _lift_statistics(bundle: WitnessBundle, shifts: Sequence[LatticePoint], l_max: int) -> Tuple[complex, Dict[str, float]]:
    dim = bundle.region.dim
    zero = (0,) * dim
    mean_entry = CorrelationEntry.make([zero], StarPolynomial.identity())
    mean = bundle.statistic(mean_entry)
    correlations = {}
    for h in shifts:
        for l in range(1, l_max + 1):
            entry = CorrelationEntry.make([h, zero], StarPolynomial.correlation(l))
            correlations[f"h={list(h)},l={l}"] = abs(bundle.statistic(entry))
    return mean, correlations


def lift_witnesses_to_circle(b: WitnessBundle, l_max: int, delta: float, rng: SeededRng, *,
                             shifts: Sequence[Sequence[int]],
                             max_copies: Optional[int] = None,
                             progress: bool = False) -> LiftResult:
    """
    每條圓盤見證 z 產生 M 條獨立的偏置圓周序列 ξ（E ξ = z/2），共 J = K·M 條。
    M 從 1 起倍增，直到平均統計量距 ε/2 不超過 δ，且沿 shifts 的 l 次冪交叉相關（1 ≤ l ≤ L）都不超過 δ。
    輸入見證沿 shifts 的相關須已不超過 δ/4，否則丟出 WitnessError；shifts 為空時只檢查平均。
    """
    for window in b.windows:
        Domain.disc().validate(window.values, what='見證')
    max_copies = max_copies or LabConfig.LIFT_MAX_COPIES
    dim = b.region.dim
    shifts = [as_point(h, dim) for h in shifts]
    zero = (0,) * dim
    for h in shifts:
        corr = abs(b.statistic(CorrelationEntry.make([h, zero], StarPolynomial.correlation(1))))
        if corr > delta / 4:
            raise WitnessError(f"輸入見證沿 h={list(h)} 的相關 {corr:.4g} 超過 δ/4={delta / 4:.4g}")
    mean_entry = CorrelationEntry.make([zero], StarPolynomial.identity())
    epsilon = b.statistic(mean_entry).real
    mean_target = epsilon / 2

    copies = 1
    with tqdm(total=int(math.log2(max_copies)) + 1, desc='lifting', disable=not progress) as bar:
        while copies <= max_copies:
            windows = []
            for k, window in enumerate(b.windows):
                for m in range(copies):
                    values, _ = _biased_draws(window.values, window.box.points(), rng.child(k, m))
                    windows.append(SequenceWindow(window.box, values.reshape(window.box.shape),
                                                  Domain.circle(), validate=False))
            lifted = WitnessBundle(tuple(windows), b.region, f"circle lift of {b.provenance} (M={copies})")
            mean, correlations = _lift_statistics(lifted, shifts, l_max)
            result = LiftResult(
                bundle=lifted,
                copies=copies,
                mean_statistic=mean,
                mean_target=mean_target,
                correlations=correlations,
                delta=delta,
                samples=lifted.K * b.region.size
            )
            if result.passed():
                logger.info(f"✅ 提升完成: M={copies}, J={lifted.K}, 最大相關 {result.max_correlation:.4g}")
                return result
            copies *= 2
            bar.update(1)

    raise ConvergenceError(f"副本數超過上限 {max_copies} 仍未達到 δ={delta}")


# ================================================================
# 凸化
# ================================================================

@dataclass
class ConvexifyResult:
    """凸化後的視窗與表示殘差"""
    window: SequenceWindow
    max_residual: float
    method: str
    representations: int

    def to_dict(self) -> dict:
        return {
            'method': self.method,
            'max_residual': self.max_residual,
            'representations': self.representations,
            'box': {'origin': list(self.window.box.origin), 'shape': list(self.window.box.shape)}
        }


def convex_representation(z: complex, vertices: np.ndarray, solver: Optional[DenseSimplex] = None) -> np.ndarray:
    """以小型線性規劃求 λ ≥ 0, Σλ = 1, Σ λ_i d_i = z；基本可行解的支撐至多 3 點"""
    solver = solver or DenseSimplex()
    A = np.vstack([np.ones(len(vertices)), vertices.real, vertices.imag])
    b = np.array([1.0, z.real, z.imag])
    try:
        result = solver.solve(np.zeros(len(vertices)), A, b)
    except SolverError as e:
        raise GeometryError(f"{z} 不在 conv(D) 內: {e}") from e
    return result.x


def _line_representation(values: np.ndarray, vertices: np.ndarray, base: complex,
                         direction: complex) -> np.ndarray:
    """共線的 D：對每個值取相鄰兩頂點做線性插值"""
    t = ((vertices - base) * np.conj(direction)).real
    order = np.argsort(t)
    t_sorted = t[order]
    s = ((values - base) * np.conj(direction)).real
    s = np.clip(s, t_sorted[0], t_sorted[-1])
    weights = np.zeros((len(values), len(vertices)))
    if len(vertices) == 1:
        weights[:, 0] = 1.0
        return weights
    upper = np.clip(np.searchsorted(t_sorted, s, side='left'), 1, len(t_sorted) - 1)
    lower = upper - 1
    span = t_sorted[upper] - t_sorted[lower]
    frac = (s - t_sorted[lower]) / span
    rows = np.arange(len(values))
    weights[rows, order[lower]] += 1.0 - frac
    weights[rows, order[upper]] += frac
    return weights


def convexify_window(w: SequenceWindow, D: Sequence[complex], rng: SeededRng,
                     tol: Optional[float] = None) -> ConvexifyResult:
    """
    對每個格點獨立抽取 D 中的一點，使其期望值等於該點的原值。
    共線的 D（含 {0,1}、{−1,1}）用兩點插值的封閉形式，其餘以線性規劃求凸表示並依值快取。
    """
    tol = LabConfig.HULL_TOLERANCE if tol is None else tol
    vertices = np.array(sorted({complex(d) for d in D}, key=lambda z: (z.real, z.imag)), dtype=complex)
    if len(vertices) == 0:
        raise ValueError("D 不可為空")
    hull = Domain.hull(vertices)
    inside = hull.contains(w.values, tol)
    if not inside.all():
        bad = w.values[~inside].ravel()[0]
        raise GeometryError(f"數值 {bad} 不在 conv(D) 內")

    flat = w.values.ravel()
    frame = collinear_frame(vertices, tol)
    if frame is not None:
        weights = _line_representation(flat, vertices, *frame)
        method = 'interval'
        n_repr = len(flat)
    else:
        unique, inverse = np.unique(flat, return_inverse=True)
        solver = DenseSimplex()
        table = np.array([convex_representation(z, vertices, solver) for z in unique])
        weights = table[inverse.ravel()]
        method = 'simplex'
        n_repr = len(unique)

    residual = max(
        float(np.abs(weights @ vertices - flat).max(initial=0.0)),
        float(np.abs(weights.sum(axis=1) - 1.0).max(initial=0.0))
    )
    if residual > tol:
        raise GeometryError(f"凸表示殘差 {residual:.3g} 超過容差 {tol}")

    u = rng.site_uniforms(w.box.points())
    cumulative = np.cumsum(weights, axis=1)
    choice = (u[:, None] >= cumulative[:, :-1]).sum(axis=1) if len(vertices) > 1 else np.zeros(len(flat), int)
    values = vertices[choice].reshape(w.box.shape)
    window = SequenceWindow(w.box, values, Domain.finite(vertices))
    return ConvexifyResult(window=window, max_residual=residual, method=method, representations=n_repr)


def mc_envelope(e: CorrelationEntry, n_sites: int) -> float:
    """兩兩相異平移條目的蒙地卡羅 3σ 包絡 3·M·sqrt((2j − 1)/|F|)"""
    if n_sites <= 0:
        raise ValueError("n_sites 必須為正")
    return 3.0 * e.poly.sup_bound * math.sqrt((2 * e.poly.arity - 1) / n_sites)


# ================================================================
# 白噪聲
# ================================================================

def white_noise_window(region: LatticeBox, rng: SeededRng) -> SequenceWindow:
    """區域上獨立同分佈的均勻單位複數"""
    theta = rng.site_uniforms(region.points()).reshape(region.shape)
    return SequenceWindow(region, np.exp(2j * np.pi * theta), Domain.circle(), validate=False)


def white_noise_envelope(n_sites: int) -> float:
    """|統計量| 的 3/√|F| 包絡"""
    return 3.0 / math.sqrt(n_sites)


# ================================================================
# 隨機見證來源
# ================================================================

class BernoulliWitnessSource:
    """獨立 Bernoulli(p) 的 {0,1} 見證：把常數 p 的視窗凸化到 {0,1}"""

    random = True

    def __init__(self, p: float, copies: int = 4):
        if not 0 <= p <= 1:
            raise ValueError(f"p 必須介於 0 與 1，收到 {p}")
        self.p = float(p)
        self.copies = copies

    def __call__(self, region: LatticeBox, extent: LatticeBox, rng: SeededRng) -> WitnessBundle:
        constant = SequenceWindow.constant(extent, self.p, Domain.unit_interval())
        windows = tuple(convexify_window(constant, (0, 1), rng.child(k)).window for k in range(self.copies))
        return WitnessBundle(windows, region, f"iid Bernoulli(p={self.p})")

    def describe(self) -> str:
        return f"bernoulli(p={self.p}, K={self.copies})"


class WhiteNoiseWitnessSource:
    """白噪聲見證：每條皆為獨立均勻單位複數"""

    random = True

    def __init__(self, copies: int = 4):
        self.copies = copies

    def __call__(self, region: LatticeBox, extent: LatticeBox, rng: SeededRng) -> WitnessBundle:
        windows = tuple(white_noise_window(extent, rng.child(k)) for k in range(self.copies))
        return WitnessBundle(windows, region, "white noise")

    def describe(self) -> str:
        return f"white_noise(K={self.copies})"


def bernoulli_witness_source(p: float, copies: int = 4) -> BernoulliWitnessSource:
    return BernoulliWitnessSource(p, copies)


def white_noise_witness_source(copies: int = 4) -> WhiteNoiseWitnessSource:
    return WhiteNoiseWitnessSource(copies)
