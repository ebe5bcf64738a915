#!/usr/bin/env python3
"""
vdC 實驗室
vdC 集合、有限見證與逆 Furstenberg 對應的數值實驗工具
"""

import os
import sys

__version__ = "1.0.0"
__author__ = "vdC Lab"
__description__ = "vdC 實驗室 - Følner 平均、瓦片合成、逆對應與譜判準"

# 模組之間以專案根目錄為基準的絕對匯入
current_dir = os.path.dirname(os.path.abspath(__file__))
if current_dir not in sys.path:
    sys.path.insert(0, current_dir)

# 導入主要類別
from config.lab_config import LabConfig
from core.averaging import CorrelationEntry, CorrelationSpec, SequenceWindow, StarPolynomial
from core.correspondence import FiniteMPS, IidSpec, inverse_furstenberg, synthesize_sequence
from core.lattice_group import FiniteLatticeSet, FolnerPlan, LatticeBox
from core.spectral_lp import dual_cosine_certificate, primal_atom_lp, vdc_evidence
from utils.report_generator import ReportGenerator
from casebook import Casebook, CaseReport

__all__ = [
    'LabConfig',
    'CorrelationEntry',
    'CorrelationSpec',
    'SequenceWindow',
    'StarPolynomial',
    'FiniteMPS',
    'IidSpec',
    'inverse_furstenberg',
    'synthesize_sequence',
    'FiniteLatticeSet',
    'FolnerPlan',
    'LatticeBox',
    'dual_cosine_certificate',
    'primal_atom_lp',
    'vdc_evidence',
    'ReportGenerator',
    'Casebook',
    'CaseReport'
]
