#!/usr/bin/env python3
"""
實驗室輸入輸出
視窗、格點集合、相關規格、有限保測系統與驗證軌跡的 CSV/JSON 讀寫，以及 H 運算式解析
"""

import json
import logging
import re
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from core.averaging import CorrelationSpec, SequenceWindow
from core.correspondence import FiniteMPS, TraceRow
from core.domains import Domain
from core.lattice_group import FiniteLatticeSet, LatticeBox, LatticePoint

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
COORD_COLUMNS = ('x0', 'x1', 'x2')


# ================================================================
# 視窗
# ================================================================

def write_window_csv(w: SequenceWindow, path: PathLike) -> str:
    """每列一個格點: x0[,x1,x2],re,im（列優先順序）"""
    points = w.box.points()
    values = w.values.ravel()
    df = pd.DataFrame(points, columns=list(COORD_COLUMNS[:w.dim]))
    df['re'] = values.real
    df['im'] = values.imag
    df.to_csv(path, index=False)
    logger.info(f"✅ 視窗已寫入: {path} ({len(df)} 個格點)")
    return str(path)


def read_window_csv(path: PathLike, domain: Domain = None) -> SequenceWindow:
    df = pd.read_csv(path)
    coord_cols = [c for c in COORD_COLUMNS if c in df.columns]
    if not coord_cols or 're' not in df.columns:
        raise ValueError(f"{path} 缺少座標欄位或 re 欄位")
    points = df[coord_cols].to_numpy(dtype=np.int64)
    values = df['re'].to_numpy(dtype=float) + 1j * (df['im'].to_numpy(dtype=float) if 'im' in df.columns else 0.0)
    box = LatticeBox.from_bounds(points.min(axis=0), points.max(axis=0) + 1)
    if box.size != len(df) or len(np.unique(points, axis=0)) != len(df):
        raise ValueError(f"{path} 的格點不是完整且不重複的方塊")
    grid = np.empty(box.shape, dtype=complex)
    grid[tuple((points - box.lo).T)] = values
    return SequenceWindow(box, grid, domain or Domain.infer(grid))


def write_window_json(w: SequenceWindow, path: PathLike) -> str:
    data = {
        'origin': list(w.box.origin),
        'shape': list(w.box.shape),
        'domain': w.domain.to_json(),
        'values': [[z.real, z.imag] for z in w.values.ravel()]
    }
    _dump_json(data, path)
    return str(path)


def read_window_json(path: PathLike) -> SequenceWindow:
    data = _load_json(path)
    box = LatticeBox(tuple(data['origin']), tuple(data['shape']))
    raw = np.asarray(data['values'], dtype=float)
    values = (raw[:, 0] + 1j * raw[:, 1]) if raw.ndim == 2 else raw.astype(complex)
    domain = Domain.from_json(data['domain']) if 'domain' in data else Domain.infer(values)
    return SequenceWindow(box, values.reshape(box.shape), domain)


def read_window(path: PathLike) -> SequenceWindow:
    """依副檔名選擇 CSV 或 JSON"""
    return read_window_json(path) if str(path).endswith('.json') else read_window_csv(path)


# ================================================================
# 格點集合
# ================================================================

def write_lattice_set(A: FiniteLatticeSet, path: PathLike) -> str:
    if str(path).endswith('.csv'):
        pd.DataFrame(A.array, columns=list(COORD_COLUMNS[:A.dim])).to_csv(path, index=False)
    else:
        _dump_json(A.to_json(), path)
    logger.info(f"✅ 集合已寫入: {path} (|A|={len(A)})")
    return str(path)


def read_lattice_set(path: PathLike, dim: int = None) -> FiniteLatticeSet:
    if str(path).endswith('.csv'):
        df = pd.read_csv(path)
        coord_cols = [c for c in COORD_COLUMNS if c in df.columns]
        return FiniteLatticeSet(df[coord_cols].to_numpy(dtype=np.int64), len(coord_cols))
    return FiniteLatticeSet.from_json(_load_json(path), dim)


# ================================================================
# 規格與系統
# ================================================================

def read_spec(path: PathLike) -> CorrelationSpec:
    return CorrelationSpec.from_json(_load_json(path))


def write_spec(spec: CorrelationSpec, path: PathLike) -> str:
    _dump_json(spec.to_json(), path)
    return str(path)


def read_mps(path: PathLike) -> FiniteMPS:
    return FiniteMPS.from_json(_load_json(path))


def write_mps(m: FiniteMPS, path: PathLike) -> str:
    _dump_json(m.to_json(), path)
    return str(path)


# ================================================================
# 驗證軌跡
# ================================================================

def trace_frame(trace: Sequence[TraceRow]) -> pd.DataFrame:
    return pd.DataFrame([{
        'N': row.N,
        'entry': row.entry,
        'value_re': row.value.real,
        'value_im': row.value.imag,
        'target_re': row.target.real,
        'target_im': row.target.imag,
        'abs_err': row.abs_err
    } for row in trace])


def write_trace(trace: Sequence[TraceRow], path: PathLike) -> str:
    """副檔名 .csv 寫成表格，否則寫成 JSON 列表"""
    if str(path).endswith('.csv'):
        trace_frame(trace).to_csv(path, index=False)
    else:
        _dump_json([row.to_dict() for row in trace], path)
    return str(path)


# ================================================================
# H 運算式
# ================================================================

def _parse_point(token: str) -> LatticePoint:
    """'3' → (3,)；'1:-2' → (1, -2)"""
    return tuple(int(c) for c in token.strip().split(':'))


def parse_h_expression(expr: str) -> List[LatticePoint]:
    """
    finite:1,2,3 | squares:<=K | range:a..b | multiples:q<=K | file:PATH
    squares:<=K 代表 {n² : 1 ≤ n ≤ K}，multiples:q<=K 代表 {q, 2q, …, Kq}
    """
    kind, _, body = expr.partition(':')
    kind = kind.strip().lower()
    body = body.strip()
    if not body:
        raise ValueError(f"H 運算式缺少內容: {expr!r}")
    if kind == 'finite':
        return [_parse_point(tok) for tok in body.split(',') if tok.strip()]
    if kind == 'squares':
        match = re.fullmatch(r'<=\s*(\d+)', body)
        if not match:
            raise ValueError(f"squares 格式應為 squares:<=K，收到 {expr!r}")
        return [(n * n,) for n in range(1, int(match.group(1)) + 1)]
    if kind == 'range':
        match = re.fullmatch(r'(-?\d+)\s*\.\.\s*(-?\d+)', body)
        if not match:
            raise ValueError(f"range 格式應為 range:a..b，收到 {expr!r}")
        a, b = int(match.group(1)), int(match.group(2))
        return [(n,) for n in range(a, b + 1) if n != 0]
    if kind == 'multiples':
        match = re.fullmatch(r'(-?\d+)\s*<=\s*(\d+)', body)
        if not match:
            raise ValueError(f"multiples 格式應為 multiples:q<=K，收到 {expr!r}")
        q, K = int(match.group(1)), int(match.group(2))
        if q == 0:
            raise ValueError("multiples 的 q 不可為 0")
        return [(q * n,) for n in range(1, K + 1)]
    if kind == 'file':
        path = Path(body)
        if not path.exists():
            raise ValueError(f"H 檔案不存在: {path}")
        df = pd.read_csv(path, header=None, sep=r'[\s,]+', engine='python', comment='#')
        return [tuple(int(v) for v in row) for row in df.dropna(axis=1, how='all').to_numpy()]
    raise ValueError(f"未知的 H 運算式種類: {kind!r}")


def parse_shift_families(text: str) -> List[List[Tuple[LatticePoint, bool]]]:
    """
    '0,1;0,~2' → [[(0,), True), ((1,), True)], [((0,), True), ((2,), False)]]
    族之間以 ';' 分隔，'~' 表示補集，多維座標以 ':' 分隔
    """
    families = []
    for chunk in text.split(';'):
        if not chunk.strip():
            continue
        family = []
        for tok in chunk.split(','):
            tok = tok.strip()
            if not tok:
                continue
            keep = not tok.startswith('~')
            family.append((_parse_point(tok.lstrip('~')), keep))
        families.append(family)
    if not families:
        raise ValueError("至少需要一個平移族")
    return families


# ================================================================
# JSON 工具
# ================================================================

def _dump_json(data: Union[Dict, List], path: PathLike):
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(data, f, ensure_ascii=False, indent=2)


def _load_json(path: PathLike):
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)
