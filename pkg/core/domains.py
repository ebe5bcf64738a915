#!/usr/bin/env python3
"""
數值定義域 D
序列取值所在的集合：單位圓盤、單位圓、{0,1}、{−1,1}、區間、有限集及其凸包
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from config.lab_config import LabConfig
from core.errors import DomainError

logger = logging.getLogger(__name__)


class DomainTag(str, Enum):
    DISC = 'disc'
    CIRCLE = 'circle'
    BINARY = 'binary'
    SIGN = 'sign'
    UNIT_INTERVAL = 'unit_interval'
    SYMMETRIC_INTERVAL = 'symmetric_interval'
    FINITE = 'finite'
    HULL = 'hull'


def collinear_frame(points: np.ndarray, tol: float) -> Optional[Tuple[complex, complex]]:
    """若複數點共線，回傳 (基點, 單位方向)；否則回傳 None"""
    base = points[0]
    rel = points - base
    spread = np.abs(rel)
    if spread.max() <= tol:
        return base, 1.0 + 0.0j
    direction = rel[int(np.argmax(spread))]
    direction = direction / abs(direction)
    off_line = np.abs((rel * np.conj(direction)).imag)
    if off_line.max() <= tol:
        return base, direction
    return None


@dataclass(frozen=True)
class Domain:
    """帶標記的定義域；FINITE 與 HULL 需提供頂點"""
    tag: DomainTag
    points: Tuple[complex, ...] = ()

    def __post_init__(self):
        if self.tag in (DomainTag.FINITE, DomainTag.HULL) and not self.points:
            raise ValueError(f"{self.tag.value} 定義域必須提供頂點")

    # ------------------------------------------------------------
    # 常用定義域
    # ------------------------------------------------------------
    @classmethod
    def disc(cls) -> 'Domain':
        return cls(DomainTag.DISC)

    @classmethod
    def circle(cls) -> 'Domain':
        return cls(DomainTag.CIRCLE)

    @classmethod
    def binary(cls) -> 'Domain':
        return cls(DomainTag.BINARY)

    @classmethod
    def sign(cls) -> 'Domain':
        return cls(DomainTag.SIGN)

    @classmethod
    def unit_interval(cls) -> 'Domain':
        return cls(DomainTag.UNIT_INTERVAL)

    @classmethod
    def symmetric_interval(cls) -> 'Domain':
        return cls(DomainTag.SYMMETRIC_INTERVAL)

    @classmethod
    def finite(cls, points: Sequence[complex]) -> 'Domain':
        unique = tuple(sorted({complex(p) for p in points}, key=lambda z: (z.real, z.imag)))
        if unique == (0j, 1 + 0j):
            return cls.binary()
        if unique == (-1 + 0j, 1 + 0j):
            return cls.sign()
        return cls(DomainTag.FINITE, unique)

    @classmethod
    def hull(cls, points: Sequence[complex]) -> 'Domain':
        unique = tuple(sorted({complex(p) for p in points}, key=lambda z: (z.real, z.imag)))
        return cls(DomainTag.HULL, unique)

    @classmethod
    def infer(cls, values: np.ndarray, tol: Optional[float] = None) -> 'Domain':
        """由數值推斷最小的常用定義域"""
        tol = LabConfig.DOMAIN_TOLERANCE if tol is None else tol
        values = np.asarray(values, dtype=complex).ravel()
        for candidate in (cls.binary(), cls.sign(), cls.unit_interval(), cls.symmetric_interval(),
                          cls.circle(), cls.disc()):
            if candidate.contains(values, tol).all():
                return candidate
        raise DomainError(f"數值超出單位圓盤，最大模長 {np.abs(values).max():.6g}")

    # ------------------------------------------------------------
    # 幾何
    # ------------------------------------------------------------
    def vertices(self) -> np.ndarray:
        """有限定義域或凸包的頂點"""
        if self.tag == DomainTag.BINARY:
            return np.array([0, 1], dtype=complex)
        if self.tag == DomainTag.SIGN:
            return np.array([-1, 1], dtype=complex)
        if self.tag in (DomainTag.FINITE, DomainTag.HULL):
            return np.array(self.points, dtype=complex)
        raise DomainError(f"{self.tag.value} 定義域沒有有限頂點")

    def is_finite(self) -> bool:
        return self.tag in (DomainTag.BINARY, DomainTag.SIGN, DomainTag.FINITE)

    def sup_modulus(self) -> float:
        if self.tag in (DomainTag.DISC, DomainTag.CIRCLE, DomainTag.BINARY, DomainTag.SIGN,
                        DomainTag.UNIT_INTERVAL, DomainTag.SYMMETRIC_INTERVAL):
            return 1.0
        return float(np.abs(self.vertices()).max())

    def default_fill(self) -> complex:
        """組裝時未覆蓋格點使用的固定值"""
        if self.tag in (DomainTag.CIRCLE, DomainTag.SIGN):
            return 1 + 0j
        if self.tag in (DomainTag.FINITE, DomainTag.HULL):
            return complex(self.points[0])
        return 0j

    def contains(self, values: np.ndarray, tol: Optional[float] = None) -> np.ndarray:
        """向量化成員測試"""
        tol = LabConfig.DOMAIN_TOLERANCE if tol is None else tol
        z = np.asarray(values, dtype=complex)
        tag = self.tag
        if tag == DomainTag.DISC:
            return np.abs(z) <= 1 + tol
        if tag == DomainTag.CIRCLE:
            return np.abs(np.abs(z) - 1) <= tol
        real_line = np.abs(z.imag) <= tol
        if tag == DomainTag.UNIT_INTERVAL:
            return real_line & (z.real >= -tol) & (z.real <= 1 + tol)
        if tag == DomainTag.SYMMETRIC_INTERVAL:
            return real_line & (np.abs(z.real) <= 1 + tol)
        if tag in (DomainTag.BINARY, DomainTag.SIGN, DomainTag.FINITE):
            verts = self.vertices()
            dist = np.abs(z[..., None] - verts).min(axis=-1)
            return dist <= tol
        return self._hull_contains(z, tol)

    def _hull_contains(self, z: np.ndarray, tol: float) -> np.ndarray:
        verts = self.vertices()
        frame = collinear_frame(verts, tol)
        if frame is not None:
            base, direction = frame
            rel = (z - base) * np.conj(direction)
            t = (verts - base) * np.conj(direction)
            return (np.abs(rel.imag) <= tol) & (rel.real >= t.real.min() - tol) & (rel.real <= t.real.max() + tol)
        try:
            hull = ConvexHull(np.column_stack([verts.real, verts.imag]))
        except QhullError as e:
            raise DomainError(f"無法建立凸包: {e}") from e
        pts = np.stack([z.real.ravel(), z.imag.ravel()], axis=1)
        offsets = pts @ hull.equations[:, :2].T + hull.equations[:, 2]
        return (offsets <= tol).all(axis=1).reshape(z.shape)

    def validate(self, values: np.ndarray, tol: Optional[float] = None, what: str = '視窗'):
        """所有數值都必須落在定義域內，否則拋出 DomainError"""
        inside = self.contains(values, tol)
        if not np.all(inside):
            bad = np.asarray(values, dtype=complex)[~inside].ravel()[:3]
            raise DomainError(f"{what}有數值不在 {self.tag.value} 定義域內: {list(bad)}")

    def sample_grid(self, n: int = 16) -> np.ndarray:
        """定義域上的有限取樣格點，用於檢查多項式上界"""
        tag = self.tag
        if tag in (DomainTag.BINARY, DomainTag.SIGN, DomainTag.FINITE):
            return self.vertices()
        if tag == DomainTag.CIRCLE:
            return np.exp(2j * np.pi * np.arange(n) / n)
        if tag == DomainTag.UNIT_INTERVAL:
            return np.linspace(0, 1, n).astype(complex)
        if tag == DomainTag.SYMMETRIC_INTERVAL:
            return np.linspace(-1, 1, n).astype(complex)
        if tag == DomainTag.DISC:
            radii = np.linspace(0, 1, max(2, n // 4))
            angles = np.exp(2j * np.pi * np.arange(n) / n)
            return np.unique((radii[:, None] * angles[None, :]).ravel())
        verts = self.vertices()
        weights = np.linspace(0, 1, max(2, n // 4))
        edges = [a + w * (b - a) for a in verts for b in verts for w in weights]
        return np.unique(np.array(edges, dtype=complex))

    # ------------------------------------------------------------
    # 序列化
    # ------------------------------------------------------------
    def to_json(self) -> dict:
        data = {'tag': self.tag.value}
        if self.points:
            data['points'] = [[p.real, p.imag] for p in self.points]
        return data

    @classmethod
    def from_json(cls, data) -> 'Domain':
        if isinstance(data, str):
            data = {'tag': data}
        tag = DomainTag(data['tag'])
        points = tuple(complex(re, im) for re, im in data.get('points', []))
        if tag == DomainTag.FINITE:
            return cls.finite(points)
        return cls(tag, points)
