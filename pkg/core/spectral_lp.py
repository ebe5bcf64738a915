#!/usr/bin/env python3
"""
譜判準模組
環面 T^d 的格點離散測度、Fourier 係數、原子質量線性規劃與對偶餘弦證書
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from config.lab_config import LabConfig
from core.errors import AliasError
from core.lattice_group import FolnerPlan, LatticePoint, as_point
from core.simplex import DenseSimplex

logger = logging.getLogger(__name__)


# ================================================================
# 格點測度
# ================================================================

class GridMeasure:
    """T^d 上以 j/M 為原子的機率測度，權重依列優先順序攤平"""

    def __init__(self, dim: int, M: int, weights: Sequence[float], tol: Optional[float] = None):
        tol = LabConfig.GRID_WEIGHT_TOLERANCE if tol is None else tol
        if M < 1:
            raise ValueError(f"解析度 M 必須為正，收到 {M}")
        weights = np.asarray(weights, dtype=float).ravel()
        if weights.size != M ** dim:
            raise ValueError(f"權重個數 {weights.size} 不等於 M^d = {M ** dim}")
        if np.any(weights < -tol) or abs(weights.sum() - 1.0) > tol:
            raise ValueError(f"權重必須非負且總和為 1，目前總和 {weights.sum():.15g}")
        self.dim = dim
        self.M = M
        self.weights = np.clip(weights, 0.0, None)

    @classmethod
    def dirac(cls, dim: int, M: int, index: Sequence[int] = None) -> 'GridMeasure':
        weights = np.zeros(M ** dim)
        idx = (0,) * dim if index is None else tuple(int(i) % M for i in index)
        weights[np.ravel_multi_index(idx, (M,) * dim)] = 1.0
        return cls(dim, M, weights)

    @classmethod
    def uniform(cls, dim: int, M: int) -> 'GridMeasure':
        return cls(dim, M, np.full(M ** dim, 1.0 / M ** dim))

    def coords(self) -> np.ndarray:
        """格點整數座標 j，形狀 (M^d, d)"""
        return grid_coords(self.dim, self.M)

    def atom_at_zero(self) -> float:
        return float(self.weights[0])

    def support(self, tol: float = 1e-12) -> List[Tuple[Tuple[int, ...], float]]:
        coords = self.coords()
        nz = np.flatnonzero(self.weights > tol)
        return [(tuple(int(c) for c in coords[i]), float(self.weights[i])) for i in nz]

    def to_json(self) -> dict:
        return {
            'dim': self.dim,
            'M': self.M,
            'atoms': [{'j': list(j), 'weight': w} for j, w in self.support()]
        }

    def __repr__(self) -> str:
        return f"GridMeasure(dim={self.dim}, M={self.M}, atoms={len(self.support())})"


def grid_coords(dim: int, M: int) -> np.ndarray:
    return np.indices((M,) * dim).reshape(dim, -1).T.astype(np.int64)


def _phases(coords: np.ndarray, h: LatticePoint, M: int) -> np.ndarray:
    """(h·j) mod M，整數運算保證只依賴 h mod M"""
    return (coords @ (np.asarray(h, dtype=np.int64) % M)) % M


def grid_fourier(mu: GridMeasure, h: Sequence[int]) -> complex:
    """μ̂(h) = Σ_j μ(j/M) e^{2πi h·j/M}"""
    h = as_point(h, mu.dim)
    k = _phases(mu.coords(), h, mu.M)
    return complex(np.dot(mu.weights, np.exp(2j * np.pi * k / mu.M)))


# ================================================================
# 原子質量線性規劃
# ================================================================

@dataclass
class CanonicalConstraint:
    """合併 ±h 後的一個頻率；sin 列在 2h ≡ 0 時恆為零而省略"""
    h: LatticePoint
    members: List[LatticePoint]
    has_sin: bool


def canonical_constraints(H0: Sequence[Sequence[int]], M: int, dim: Optional[int] = None) -> List[CanonicalConstraint]:
    """把 H₀ 依 mod M 與共軛對稱合併；h ≡ 0 時拋出 AliasError"""
    if not len(H0):
        return []
    points = [as_point(h, dim) for h in H0]
    dim = len(points[0])
    merged: Dict[LatticePoint, CanonicalConstraint] = {}
    for h in points:
        reduced = tuple(c % M for c in h)
        if not any(reduced):
            raise AliasError(f"平移 {h} 在解析度 M={M} 下與 0 重疊")
        negated = tuple((-c) % M for c in reduced)
        key = min(reduced, negated)
        if key in merged:
            merged[key].members.append(h)
        else:
            has_sin = any((2 * c) % M for c in key)
            merged[key] = CanonicalConstraint(key, [h], has_sin)
    return list(merged.values())


def _zero_neighbourhood(coords: np.ndarray, M: int, radius: int) -> np.ndarray:
    centered = np.minimum(coords, M - coords)
    return (centered <= radius).all(axis=1)


def _constraint_matrix(constraints: List[CanonicalConstraint], coords: np.ndarray, M: int) -> Tuple[np.ndarray, List[Tuple[int, str]]]:
    rows = [np.ones(len(coords))]
    labels: List[Tuple[int, str]] = [(-1, 'mass')]
    for i, con in enumerate(constraints):
        angle = 2 * np.pi * _phases(coords, con.h, M) / M
        rows.append(np.cos(angle))
        labels.append((i, 'cos'))
        if con.has_sin:
            rows.append(np.sin(angle))
            labels.append((i, 'sin'))
    return np.vstack(rows), labels


@dataclass
class AtomLPSolution:
    value: float
    measure: GridMeasure
    duals: np.ndarray
    labels: List[Tuple[int, str]]
    constraints: List[CanonicalConstraint]
    iterations: int = 0


def _solve_atom_lp(H0, M: int, radius: int, dim: Optional[int]) -> AtomLPSolution:
    constraints = canonical_constraints(H0, M, dim)
    if dim is None:
        dim = len(constraints[0].h) if constraints else 1
    coords = grid_coords(dim, M)
    A, labels = _constraint_matrix(constraints, coords, M)
    b = np.zeros(A.shape[0])
    b[0] = 1.0
    c = _zero_neighbourhood(coords, M, radius).astype(float)
    solver = DenseSimplex()
    result = solver.solve(c, A, b)
    measure = GridMeasure(dim, M, result.x / result.x.sum())
    logger.debug(f"原子 LP: |H₀|={len(H0)}, M={M}, 最佳值 {result.objective:.6g}, 迭代 {result.iterations}")
    return AtomLPSolution(result.objective, measure, result.duals, labels, constraints, result.iterations)


def primal_atom_lp(H0: Sequence[Sequence[int]], M: int, radius: int = 0,
                   dim: Optional[int] = None) -> Tuple[float, GridMeasure]:
    """
    在 μ̂(h) = 0（∀h ∈ H₀）的格點機率測度中最大化 0 處原子質量
    radius > 0 時改為最大化 0 的 r 格鄰域質量
    """
    solution = _solve_atom_lp(H0, M, radius, dim)
    return solution.value, solution.measure


# ================================================================
# 對偶證書
# ================================================================

@dataclass
class CosineCertificate:
    """T(x) = Σ a_h cos 2πh·x + b_h sin 2πh·x，T(0) = 1，格點上 T ≥ −ε"""
    support: List[LatticePoint]
    a: np.ndarray
    b: np.ndarray
    epsilon: float
    M: int
    primal_value: float = 0.0
    dual_value: float = 0.0
    gap: float = 0.0

    @property
    def dim(self) -> int:
        return len(self.support[0]) if self.support else 1

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """在點 x（形狀 (n, d) 或 (n,)）上求 T"""
        x = np.asarray(x, dtype=float).reshape(-1, self.dim)
        if not self.support:
            return np.zeros(len(x))
        H = np.asarray(self.support, dtype=float)
        angle = 2 * np.pi * (x @ H.T)
        return np.cos(angle) @ self.a + np.sin(angle) @ self.b

    def grid_values(self) -> np.ndarray:
        return self.evaluate(grid_coords(self.dim, self.M) / self.M)

    def implied_bound(self) -> float:
        """ε/(1+ε)：任何滿足約束的測度在 0 處的原子上界"""
        if math.isinf(self.epsilon):
            return 1.0
        return self.epsilon / (1 + self.epsilon)

    def check(self, tol: Optional[float] = None) -> bool:
        tol = LabConfig.CERTIFICATE_TOLERANCE if tol is None else tol
        if math.isinf(self.epsilon):
            return True
        values = self.grid_values()
        return abs(values[0] - 1.0) <= tol and values[1:].min(initial=math.inf) >= -self.epsilon - tol

    def to_json(self) -> dict:
        return {
            'M': self.M,
            'epsilon': self.epsilon if math.isfinite(self.epsilon) else 'inf',
            'primal_value': self.primal_value,
            'dual_value': self.dual_value,
            'gap': self.gap,
            'terms': [{'h': list(h), 'a': float(a), 'b': float(b)}
                      for h, a, b in zip(self.support, self.a, self.b)]
        }


def dual_cosine_certificate(H0: Sequence[Sequence[int]], M: int, dim: Optional[int] = None) -> CosineCertificate:
    """
    由原子 LP 的對偶變數 y 組成證書：P = Σ y_cos cos + y_sin sin，T = P/(1 − v)，ε = v/(1 − v)
    """
    solution = _solve_atom_lp(H0, M, 0, dim)
    v = solution.value
    n = len(solution.constraints)
    support = [con.h for con in solution.constraints]
    a = np.zeros(n)
    b = np.zeros(n)
    for y, (i, kind) in zip(solution.duals, solution.labels):
        if kind == 'cos':
            a[i] = y
        elif kind == 'sin':
            b[i] = y
    dual_value = float(solution.duals[0])

    if v >= 1.0 - 1e-12 or n == 0:
        return CosineCertificate(support, a, b, math.inf, M, v, dual_value, abs(v - dual_value))

    scale = 1.0 - v
    cert = CosineCertificate(support, a / scale, b / scale, v / scale, M, v, dual_value)
    values = cert.grid_values()
    eps_grid = -float(values[1:].min()) if len(values) > 1 else 0.0
    bound = eps_grid / (1 + eps_grid) if eps_grid > -1 else 0.0
    cert.gap = max(abs(v - dual_value), abs(v - bound))
    if cert.gap > LabConfig.DUALITY_GAP_TOLERANCE:
        logger.warning(f"⚠️ 對偶間隙 {cert.gap:.3g} 超過容差 {LabConfig.DUALITY_GAP_TOLERANCE}")
    return cert


# ================================================================
# 特徵平均衰減
# ================================================================

@dataclass
class DecayCheck:
    value: float
    bound: float

    @property
    def within_bound(self) -> bool:
        return self.value <= self.bound + 1e-12


def character_average_decay(x: Sequence[float], plan: FolnerPlan, N: int) -> DecayCheck:
    """|(1/|F_N|) Σ_{g∈F_N} e^{2πi x·g}| 與幾何級數上界 Π min(1, 1/(s·|sin πx_i|))"""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size != plan.dim:
        raise ValueError(f"點 x 的維度 {x.size} 與計畫維度 {plan.dim} 不符")
    box = plan.box(N)
    value = 1.0
    bound = 1.0
    for xi, lo, s in zip(x, box.lo, box.shape):
        g = np.arange(lo, lo + s)
        value *= abs(np.exp(2j * np.pi * xi * g).sum()) / s
        sin = abs(math.sin(math.pi * xi))
        bound *= 1.0 if sin < 1e-15 else min(1.0, 1.0 / (s * sin))
    return DecayCheck(float(value), float(bound))


# ================================================================
# vdC 證據
# ================================================================

@dataclass
class EvidenceReport:
    """截斷排程上的原始最佳值表與判定"""
    description: str
    table: List[dict]
    verdict: str
    floor: float
    threshold: float
    gaps: List[float] = field(default_factory=list)

    @property
    def optima(self) -> List[float]:
        return [row['optimum'] for row in self.table]

    def to_dict(self) -> dict:
        return {
            'H_description': self.description,
            'schedule': [{'size': row['size'], 'M': row['M']} for row in self.table],
            'optima': self.table,
            'duality_gaps': self.gaps,
            'verdict': self.verdict,
            'floor': self.floor,
            'threshold': self.threshold
        }


VERDICTS = ('vdC-evidence', 'non-vdC-evidence', 'inconclusive')


def _decide(optima: List[float], threshold: float) -> str:
    decreasing = all(b < a for a, b in zip(optima, optima[1:]))
    if optima[-1] < threshold and (len(optima) == 1 or decreasing):
        return 'vdC-evidence'
    stable = len(optima) == 1 or abs(optima[-1] - optima[-2]) <= 1e-9
    if min(optima) >= threshold and stable:
        return 'non-vdC-evidence'
    return 'inconclusive'


def vdc_evidence(H: Sequence[Sequence[int]], sizes: Sequence[int], M_schedule: Sequence[int],
                 threshold: Optional[float] = None, description: str = '',
                 progress: bool = False) -> EvidenceReport:
    """
    依排程對 H 的前 n 個元素求解原子 LP
    M_schedule 只有一個值時套用於所有步驟
    """
    threshold = LabConfig.VDC_THRESHOLD if threshold is None else threshold
    sizes = list(sizes)
    M_schedule = list(M_schedule)
    if not sizes:
        raise ValueError("截斷排程不可為空")
    if len(M_schedule) == 1:
        M_schedule = M_schedule * len(sizes)
    if len(M_schedule) != len(sizes):
        raise ValueError("截斷排程與解析度排程長度不符")
    if any(b < a for a, b in zip(sizes, sizes[1:])) or any(b < a for a, b in zip(M_schedule, M_schedule[1:])):
        raise ValueError("排程必須遞增")
    H = list(H)
    if sizes[-1] > len(H):
        raise ValueError(f"H 只有 {len(H)} 個元素，排程要求 {sizes[-1]}")

    table = []
    gaps = []
    steps = list(zip(sizes, M_schedule))
    for size, M in tqdm(steps, desc="vdC 證據", disable=not progress):
        cert = dual_cosine_certificate(H[:size], M)
        table.append({'size': size, 'M': M, 'optimum': cert.primal_value,
                      'epsilon': cert.epsilon if math.isfinite(cert.epsilon) else None})
        gaps.append(cert.gap)

    optima = [row['optimum'] for row in table]
    verdict = _decide(optima, threshold)
    report = EvidenceReport(description or f"{len(H)} 個平移", table, verdict, min(optima), threshold, gaps)
    logger.info(f"vdC 證據: {verdict} (下界 {report.floor:.4g}, 門檻 {threshold})")
    return report
