"""
共用測試設定與 fixture
"""

import os
import sys

import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, ROOT)

from config.lab_config import LabConfig
from core.averaging import CorrelationEntry, CorrelationSpec, StarPolynomial
from core.correspondence import rotation_mps
from core.randomization import SeededRng


@pytest.fixture
def rng():
    return SeededRng(12345)


@pytest.fixture
def z2_mps():
    return rotation_mps(2)


@pytest.fixture
def z2_spec():
    """Z_2 旋轉的平均與平移 1 乘積相關"""
    return CorrelationSpec((
        CorrelationEntry.make([(0,)], StarPolynomial.identity(), target=0.5, label='mean'),
        CorrelationEntry.make([(0,), (1,)], StarPolynomial.product(2), target=0.0, label='pair h=1'),
    ))


@pytest.fixture
def results_dir(tmp_path, monkeypatch):
    path = tmp_path / 'results'
    monkeypatch.setattr(LabConfig, 'RESULTS_DIR', str(path))
    return path
