#!/usr/bin/env python3
"""
實驗室例外層級
函式庫程式碼只拋出這些例外，由呼叫端（案例集、命令列）決定如何回報
"""


class LabError(Exception):
    """所有實驗室錯誤的基底類"""


class CoverageError(LabError, ValueError):
    """視窗缺少計算所需的格點"""


class DomainError(LabError, ValueError):
    """數值不在標記的定義域 D 內，或定義域標記不符"""


class GeometryError(DomainError):
    """數值落在 conv(D) 之外"""


class ScheduleError(LabError, ValueError):
    """門檻排程或層級與視窗大小不相容"""


class WitnessError(LabError, RuntimeError):
    """見證序列無法達到要求的 δ"""


class RationalizationError(WitnessError):
    """權重無法在分母上限內有理化"""


class ConvergenceError(LabError, RuntimeError):
    """自適應樣本數超過上限仍未收斂"""


class AliasError(LabError, ValueError):
    """H₀ 中存在 h ≡ 0 (mod M)"""


class SolverError(LabError, RuntimeError):
    """線性規劃迭代超限、不可行或無界"""


class UnknownCaseError(LabError, KeyError):
    """案例名稱不在目錄中"""
