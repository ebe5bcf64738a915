#!/usr/bin/env python3
"""
稠密兩階段單純形法
標準形 max c·x, A x = b, x ≥ 0；Bland 規則防止循環，並回傳對偶變數
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from config.lab_config import LabConfig
from core.errors import SolverError

logger = logging.getLogger(__name__)


@dataclass
class LPResult:
    """線性規劃求解結果"""
    status: str
    x: np.ndarray
    objective: float
    duals: np.ndarray
    basis: List[int] = field(default_factory=list)
    iterations: int = 0
    dropped_rows: List[int] = field(default_factory=list)


class DenseSimplex:
    """以稠密表格實作的兩階段單純形法"""

    def __init__(self, max_iterations: Optional[int] = None, tolerance: Optional[float] = None):
        self.max_iterations = max_iterations or LabConfig.SIMPLEX_MAX_ITERATIONS
        self.tolerance = tolerance or LabConfig.SIMPLEX_TOLERANCE
        self.iterations = 0

    @staticmethod
    def _pivot(T: np.ndarray, row: int, col: int):
        T[row, :] /= T[row, col]
        factors = T[:, col].copy()
        factors[row] = 0.0
        T -= np.outer(factors, T[row, :])

    def _enter(self, z_row: np.ndarray, allowed: np.ndarray) -> int:
        # Bland: 最左邊的負縮減成本
        candidates = np.flatnonzero((z_row[:-1] < -self.tolerance) & allowed)
        return int(candidates[0]) if len(candidates) else -1

    def _leave(self, T: np.ndarray, col: int, basis: List[int]) -> int:
        column = T[:-1, col]
        rows = np.flatnonzero(column > self.tolerance)
        if len(rows) == 0:
            return -1
        ratios = T[rows, -1] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + self.tolerance * max(1.0, abs(best))]
        # 比值相同時取基變數索引最小者
        return int(min(ties, key=lambda r: basis[r]))

    def _run(self, T: np.ndarray, basis: List[int], allowed: np.ndarray) -> str:
        while True:
            j = self._enter(T[-1, :], allowed)
            if j == -1:
                return 'optimal'
            i = self._leave(T, j, basis)
            if i == -1:
                return 'unbounded'
            self._pivot(T, i, j)
            basis[i] = j
            self.iterations += 1
            if self.iterations > self.max_iterations:
                return 'iteration_limit'

    def solve(self, c: np.ndarray, A: np.ndarray, b: np.ndarray) -> LPResult:
        """求解 max c·x s.t. A x = b, x ≥ 0"""
        c = np.asarray(c, dtype=float)
        A = np.array(A, dtype=float, copy=True)
        b = np.array(b, dtype=float, copy=True)
        m, n = A.shape
        self.iterations = 0

        # 讓 b ≥ 0
        flips = np.where(b < 0, -1.0, 1.0)
        A *= flips[:, None]
        b *= flips

        # 第一階段: max −Σ a
        T = np.zeros((m + 1, n + m + 1))
        T[:m, :n] = A
        T[:m, n:n + m] = np.eye(m)
        T[:m, -1] = b
        T[-1, :n] = -A.sum(axis=0)
        T[-1, -1] = -b.sum()
        basis = list(range(n, n + m))
        allowed = np.ones(n + m, dtype=bool)

        status = self._run(T, basis, allowed)
        if status == 'iteration_limit':
            raise SolverError(f"第一階段超過迭代上限 {self.max_iterations}")
        scale = max(1.0, float(np.abs(b).max(initial=0.0)))
        if T[-1, -1] < -1e-8 * scale:
            raise SolverError(f"線性規劃不可行 (第一階段殘差 {-T[-1, -1]:.3g})")

        # 把人工變數移出基底；全零列代表冗餘約束
        keep_rows = []
        dropped = []
        for r in range(m):
            if basis[r] >= n:
                nonzero = np.flatnonzero(np.abs(T[r, :n]) > self.tolerance)
                if len(nonzero):
                    self._pivot(T, r, int(nonzero[0]))
                    basis[r] = int(nonzero[0])
                    keep_rows.append(r)
                else:
                    dropped.append(r)
            else:
                keep_rows.append(r)
        if dropped:
            logger.info(f"⚠️ 移除 {len(dropped)} 條冗餘約束")

        T2 = np.vstack([T[keep_rows][:, list(range(n)) + [n + m]], np.zeros((1, n + 1))])
        basis2 = [basis[r] for r in keep_rows]

        # 第二階段: 重建目標列
        T2[-1, :n] = -c
        for r, bc in enumerate(basis2):
            if c[bc] != 0.0:
                T2[-1, :] += c[bc] * T2[r, :]

        status = self._run(T2, basis2, np.ones(n, dtype=bool))
        if status == 'unbounded':
            raise SolverError("線性規劃無界")
        if status == 'iteration_limit':
            raise SolverError(f"第二階段超過迭代上限 {self.max_iterations}")

        x = np.zeros(n)
        for r, bc in enumerate(basis2):
            x[bc] = T2[r, -1]
        x = np.where(x < 0, 0.0, x)

        duals = np.zeros(m)
        if basis2:
            B = A[keep_rows][:, basis2]
            y, *_ = np.linalg.lstsq(B.T, c[basis2], rcond=None)
            duals[keep_rows] = y
        duals *= flips

        return LPResult(
            status='optimal',
            x=x,
            objective=float(c @ x),
            duals=duals,
            basis=basis2,
            iterations=self.iterations,
            dropped_rows=dropped
        )
