#!/usr/bin/env python3
"""
vdC 案例集
以固定種子重現的具名實驗；每個量測值都由核心模組計算，並標註目標值來源
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from config.lab_config import LabConfig
from core.averaging import (
    CorrelationEntry,
    CorrelationSpec,
    SequenceWindow,
    StarPolynomial,
    cesaro_correlation,
    set_density,
)
from core.correspondence import (
    FiniteMPS,
    duplicate_real_imag,
    identity_mps,
    inverse_furstenberg,
    mps_correlation,
    product_mps,
    rotation_mps,
    semigroup_ifc,
    synthesize_sequence,
    union_ifc,
)
from core.domains import Domain
from core.errors import LabError, UnknownCaseError
from core.lattice_group import FolnerPlan, LatticeBox
from core.randomization import SeededRng, convexify_window, mc_envelope
from core.spectral_lp import primal_atom_lp
from utils.report_generator import ReportGenerator

logger = logging.getLogger(__name__)

PROVENANCES = ('literature', 'derived', 'trivial')
COMPARATORS = ('abs', 'ge', 'le', 'eq')


@dataclass
class Measurement:
    """單一量測值與其目標、容差和目標來源"""
    name: str
    value: float
    target: float
    tolerance: float = 0.0
    provenance: str = 'derived'
    comparator: str = 'abs'

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"未知的目標來源: {self.provenance}")
        if self.comparator not in COMPARATORS:
            raise ValueError(f"未知的比較方式: {self.comparator}")
        self.value = float(self.value)
        self.target = float(self.target)

    @property
    def passed(self) -> bool:
        if self.comparator == 'abs':
            return abs(self.value - self.target) <= self.tolerance
        if self.comparator == 'ge':
            return self.value >= self.target - self.tolerance
        if self.comparator == 'le':
            return self.value <= self.target + self.tolerance
        return self.value == self.target

    def to_dict(self) -> dict:
        return {
            'name': self.name,
            'value': self.value,
            'target': self.target,
            'tolerance': self.tolerance,
            'provenance': self.provenance,
            'comparator': self.comparator,
            'passed': self.passed
        }


@dataclass
class CaseReport:
    """案例執行結果"""
    case_id: str
    parameters: Dict[str, Any]
    measurements: List[Measurement] = field(default_factory=list)
    seed: int = 0
    runtime: float = 0.0
    error_message: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.error_message is None and bool(self.measurements) and all(m.passed for m in self.measurements)

    def to_dict(self, include_runtime: bool = True) -> dict:
        data = {
            'case_id': self.case_id,
            'parameters': self.parameters,
            'measurements': [m.to_dict() for m in self.measurements],
            'passed': self.passed,
            'seed': self.seed,
            'error_message': self.error_message
        }
        if include_runtime:
            data['runtime'] = self.runtime
        return data


def _pair_entry(h: int, poly: StarPolynomial = None) -> CorrelationEntry:
    return CorrelationEntry.make([(0,), (h,)], poly or StarPolynomial.product(2), label=f"pair h={h}")


def _mean_entry() -> CorrelationEntry:
    return CorrelationEntry.make([(0,)], StarPolynomial.identity(), label='mean')


class Casebook:
    """封閉的案例目錄與執行器"""

    DEFAULTS: Dict[str, Dict[str, Any]] = {
        'finite_not_vdc': {'k': 3, 'M': 64, 'window_exponent': 14, 'p': 0.5},
        'partition_regularity': {'h_max': 9},
        'difference_set_nice': {'N': 8, 'lam': 0.1, 'q': 5},
        'coset_complement': {'q': 4},
        'half_density_unions': {'A': [0, 1, 2], 'extra_unions': [[0, 3], [0, 5, 7], [0, 1, 2, 3, 4]],
                                'horizon_exponent': None},
        'nice_recurrence_transfer': {'H0': [1, 3, 5], 'horizon_exponent': 14},
        'pm1_reduction': {'q': 4, 'amplitude': 0.9, 'shifts': [1, 2], 'horizon_exponent': 14},
        'semigroup_N': {'horizon_exponent': 14},
    }

    def __init__(self, tolerance: Optional[float] = None):
        self.tolerance = LabConfig.CASE_TOLERANCE if tolerance is None else tolerance
        self.report_generator = ReportGenerator()
        self._cases: Dict[str, Callable[[Dict[str, Any], SeededRng], List[Measurement]]] = {
            'finite_not_vdc': self._finite_not_vdc,
            'partition_regularity': self._partition_regularity,
            'difference_set_nice': self._difference_set_nice,
            'coset_complement': self._coset_complement,
            'half_density_unions': self._half_density_unions,
            'nice_recurrence_transfer': self._nice_recurrence_transfer,
            'pm1_reduction': self._pm1_reduction,
            'semigroup_N': self._semigroup_n,
        }

    @property
    def names(self) -> List[str]:
        return list(self._cases)

    # ------------------------------------------------------------
    # 執行
    # ------------------------------------------------------------
    def run_case(self, name: str, params: Optional[Dict[str, Any]] = None,
                 seed: Optional[int] = None) -> CaseReport:
        """執行單一案例；庫內錯誤會記錄在報告中而不拋出"""
        if name not in self._cases:
            raise UnknownCaseError(name)
        merged = dict(self.DEFAULTS[name])
        merged.update(params or {})
        seed = LabConfig.DEFAULT_SEED if seed is None else seed
        report = CaseReport(case_id=name, parameters=merged, seed=seed)

        start = time.perf_counter()
        try:
            report.measurements = self._cases[name](merged, SeededRng(seed))
        except (LabError, ValueError) as e:
            report.error_message = f"{type(e).__name__}: {e}"
            logger.error(f"❌ 案例 {name} 失敗: {report.error_message}")
        report.runtime = time.perf_counter() - start
        return report

    def run_all(self, names: Optional[Sequence[str]] = None, seed: Optional[int] = None,
                parallel: bool = False, save: bool = False) -> List[CaseReport]:
        """依目錄順序執行（可並行），結果依案例 id 合併"""
        names = list(names or self.names)
        for name in names:
            if name not in self._cases:
                raise UnknownCaseError(name)

        reports: Dict[str, CaseReport] = {}
        if parallel and len(names) > 1:
            with ThreadPoolExecutor(max_workers=LabConfig.MAX_WORKERS) as pool:
                futures = {name: pool.submit(self.run_case, name, None, seed) for name in names}
                for i, name in enumerate(names, 1):
                    reports[name] = futures[name].result()
                    self._print_progress(i, len(names), reports[name])
        else:
            for i, name in enumerate(names, 1):
                reports[name] = self.run_case(name, seed=seed)
                self._print_progress(i, len(names), reports[name])

        ordered = [reports[name] for name in names]
        self._display_summary(ordered)
        if save:
            timestamp = time.strftime('%Y%m%d_%H%M%S')
            results = [r.to_dict() for r in ordered]
            self.report_generator.save_json_report(results, timestamp)
            self.report_generator.save_html_report(results, timestamp)
        return ordered

    @staticmethod
    def _print_progress(i: int, total: int, report: CaseReport):
        mark = '✅' if report.passed else '❌'
        print(f"[{i}/{total}] {mark} {report.case_id} ({report.runtime:.2f}s)")

    @staticmethod
    def _display_summary(reports: List[CaseReport]):
        passed = sum(1 for r in reports if r.passed)
        print("=" * 60)
        print(f"📈 案例集: {passed}/{len(reports)} 通過")
        print("=" * 60)

    # ------------------------------------------------------------
    # 案例
    # ------------------------------------------------------------
    def _finite_not_vdc(self, params: Dict[str, Any], rng: SeededRng) -> List[Measurement]:
        """有限 H 不是 vdC 集：LP 下界，並以 iid 視窗實現 B = {g: x_g = 0, x_{g+h} = 1 ∀h∈H}"""
        k, M = int(params['k']), int(params['M'])
        H = list(range(1, k + 1))
        value, _ = primal_atom_lp([(h,) for h in H], M)
        measurements = [Measurement('atom_lp_optimum', value, 1.0 / (k + 1), 1e-9, 'derived', 'ge')]

        length = 2 ** int(params['window_exponent'])
        extent = LatticeBox((0,), (length + k,))
        constant = SequenceWindow.constant(extent, float(params['p']), Domain.unit_interval())
        x = convexify_window(constant, (0, 1), rng.child(0)).window
        A = x.support()
        F = LatticeBox((0,), (length,))
        pattern = [((0,), False)] + [((h,), True) for h in H]

        # B = F ∖ A ∩ ⋂_h (A − h)
        B = F.to_set().difference(A)
        for h in H:
            B = B.intersection(A.translate((-h,)))

        p = float(params['p'])
        measurements.append(Measurement('density_B', set_density(A, pattern, F, extent),
                                        (1 - p) * p ** k, self.tolerance, 'derived'))
        measurements.append(Measurement('size_B_over_F', len(B) / F.size, (1 - p) * p ** k,
                                        self.tolerance, 'derived'))
        for h in H:
            overlap = set_density(B, [((0,), True), ((h,), True)], F, extent)
            measurements.append(Measurement(f'density_B_cap_B-{h}', overlap, 0.0, 0.0, 'literature', 'eq'))
        return measurements

    def _partition_regularity(self, params: Dict[str, Any], rng: SeededRng) -> List[Measurement]:
        """兩個非 vdC 見證的乘積在聯集上相關為零且平均非零"""
        h_max = int(params['h_max'])
        H1 = [h for h in range(1, h_max + 1) if h % 2]
        H2 = [h for h in range(1, h_max + 1) if h % 3]
        m1, m2 = rotation_mps(2), rotation_mps(3)
        product = product_mps(m1, m2)

        def worst(m: FiniteMPS, H: Sequence[int]) -> float:
            return max(abs(mps_correlation(m, _pair_entry(h, StarPolynomial.correlation()))) for h in H)

        return [
            Measurement('Z2_mean', mps_correlation(m1, _mean_entry()).real, 0.5, 1e-12, 'trivial'),
            Measurement('Z2_max_corr_on_H1', worst(m1, H1), 0.0, 1e-12, 'derived'),
            Measurement('Z3_mean', mps_correlation(m2, _mean_entry()).real, 1 / 3, 1e-12, 'trivial'),
            Measurement('Z3_max_corr_on_H2', worst(m2, H2), 0.0, 1e-12, 'derived'),
            Measurement('product_mean', mps_correlation(product, _mean_entry()).real, 1 / 6, 1e-12, 'derived'),
            Measurement('product_max_corr_on_union', worst(product, sorted(set(H1) | set(H2))),
                        0.0, 1e-12, 'literature'),
        ]

    def _difference_set_nice(self, params: Dict[str, Any], rng: SeededRng) -> List[Measurement]:
        """N²|∫f|² ≤ ‖Σ_{a∈A₀} T_a f‖² ≤ N|B|‖f‖² + N²λ，B 為相關超過 λ 的差集"""
        N, lam, q = int(params['N']), float(params['lam']), int(params['q'])
        m = rotation_mps(q)
        A0 = list(range(N))
        mean = mps_correlation(m, _mean_entry())
        norm_sq = mps_correlation(m, _pair_entry(0, StarPolynomial.correlation())).real

        corr = {}
        for d in range(-(N - 1), N):
            corr[d] = mps_correlation(m, _pair_entry(d, StarPolynomial.correlation()))
        middle = sum(corr[a - b] for a in A0 for b in A0).real
        B = [d for d, c in corr.items() if abs(c) > lam]
        lhs = N ** 2 * abs(mean) ** 2
        rhs = N * len(B) * norm_sq + N ** 2 * lam
        return [
            Measurement('lhs_le_middle', middle - lhs, 0.0, 1e-12, 'literature', 'ge'),
            Measurement('middle_le_rhs', rhs - middle, 0.0, 1e-12, 'literature', 'ge'),
            Measurement('lhs', lhs, N ** 2 / q ** 2, 1e-12, 'derived'),
        ]

    def _coset_complement(self, params: Dict[str, Any], rng: SeededRng) -> List[Measurement]:
        """Z/q 旋轉、B = {0}：g ∉ qZ 時 g·B ∩ B = ∅"""
        q = int(params['q'])
        m = rotation_mps(q)
        overlaps = {g: mps_correlation(m, _pair_entry(g)).real for g in range(-2 * q, 2 * q + 1)}
        outside = [v for g, v in overlaps.items() if g % q]
        inside = [v for g, v in overlaps.items() if not g % q]
        return [
            Measurement('max_overlap_outside_qZ', max(outside), 0.0, 0.0, 'literature', 'eq'),
            Measurement('min_overlap_on_qZ', min(inside), 1.0 / q, 1e-12, 'trivial'),
        ]

    def _horizon(self, params: Dict[str, Any]) -> int:
        exponent = params.get('horizon_exponent') or LabConfig.CASE_HORIZON_EXPONENT
        return 2 ** int(exponent)

    def _half_density_unions(self, params: Dict[str, Any], rng: SeededRng) -> List[Measurement]:
        """恆等作用、μ(B) = 1/2：d(∪_{a∈A} (E − a)) = 1/2"""
        m = identity_mps([0.5, 0.5], [1, 0])
        unions = [list(params['A'])] + [list(u) for u in params.get('extra_unions', [])]
        result = union_ifc(m, [[(a,) for a in u] for u in unions], self._horizon(params), rng=rng)
        union_rows = [row for row in result.rows if row.kind == 'union']
        return [Measurement(f"union_density_{'_'.join(str(a) for a in u)}", row.density, 0.5,
                            self.tolerance, 'literature')
                for u, row in zip(unions, union_rows)]

    def _nice_recurrence_transfer(self, params: Dict[str, Any], rng: SeededRng) -> List[Measurement]:
        """μ(B ∩ T_h B) 低於 μ(B)² 的缺口透過逆對應轉移到集合 E"""
        H0 = [int(h) for h in params['H0']]
        m = rotation_mps(2)
        families = [[((0,), True), ((h,), True)] for h in H0]
        result = inverse_furstenberg(m, families, self._horizon(params), rng=rng)
        mean = result.rows[0].density
        measurements = [Measurement('density_E', mean, 0.5, self.tolerance, 'derived')]
        mu_B = mps_correlation(m, _mean_entry()).real
        for h, row in zip(H0, result.rows[1:]):
            target_deficit = mu_B ** 2 - row.target
            measurements.append(Measurement(f'deficit_h={h}', mean ** 2 - row.density, target_deficit,
                                            self.tolerance, 'literature'))

        squared = product_mps(m, m)
        measurements.append(Measurement('product_mean', mps_correlation(squared, _mean_entry()).real,
                                        0.25, 1e-12, 'derived'))
        worst = max(abs(mps_correlation(squared, _pair_entry(h))) for h in H0)
        measurements.append(Measurement('product_max_overlap', worst, 0.0, 1e-12, 'derived'))
        return measurements

    def _pm1_reduction(self, params: Dict[str, Any], rng: SeededRng) -> List[Measurement]:
        """複值系統 → 實部/虛部雙份系統 → 合成 → 凸化到 {−1, 1}"""
        q = int(params['q'])
        amplitude = float(params['amplitude'])
        m = rotation_mps(q, observable=amplitude * np.round(1j ** np.arange(q)))
        dup = duplicate_real_imag(m)
        measurements = []
        for h in range(1, q):
            lhs = mps_correlation(dup, CorrelationEntry.make([(h,), (0,)], StarPolynomial.product(2))).real
            rhs = 0.5 * mps_correlation(m, CorrelationEntry.make([(h,), (0,)], StarPolynomial.correlation())).real
            measurements.append(Measurement(f'duplication_identity_h={h}', lhs, rhs, 1e-12, 'literature'))

        shifts = [int(h) for h in params['shifts']]
        spec = CorrelationSpec(tuple([_mean_entry()] + [_pair_entry(h) for h in shifts]))
        horizon = self._horizon(params)
        synthesis = synthesize_sequence(spec, dup, horizon, rng=rng.child(0))
        signs = convexify_window(synthesis.window, (-1, 1), rng.child(1)).window

        F = FolnerPlan(dim=1).box(horizon)
        for idx, e in enumerate(spec.entries):
            target = mps_correlation(dup, e)
            value = cesaro_correlation(signs, e, F)
            tol = synthesis.bound + mc_envelope(e, F.size)
            measurements.append(Measurement(f'pm1_{e.label or idx}', value.real, target.real, tol, 'derived'))
        measurements.append(Measurement('synthesis_final_error', synthesis.final_error, synthesis.bound,
                                        0.0, 'derived', 'le'))
        return measurements

    def _semigroup_n(self, params: Dict[str, Any], rng: SeededRng) -> List[Measurement]:
        """ℕ 作用的逆對應：F_N = {1, …, N}"""
        horizon = self._horizon(params)
        identity = identity_mps([0.5, 0.5], [1, 0])
        first = semigroup_ifc(identity, [[((0,), True)]], horizon, rng=rng.child(0))
        rotation = semigroup_ifc(rotation_mps(2), [[((0,), True), ((1,), True)]], horizon, rng=rng.child(1))
        inside = bool(len(rotation.A) == 0 or rotation.A.array.min() >= 1)
        return [
            Measurement('identity_density', first.rows[0].density, 0.5, self.tolerance, 'literature'),
            Measurement('rotation_density', rotation.rows[0].density, 0.5, self.tolerance, 'derived'),
            Measurement('rotation_pair_density', rotation.rows[1].density, 0.0, self.tolerance, 'derived'),
            Measurement('set_inside_naturals', float(inside), 1.0, 0.0, 'trivial', 'eq'),
        ]


def run_case(name: str, params: Optional[Dict[str, Any]] = None, seed: Optional[int] = None) -> CaseReport:
    return Casebook().run_case(name, params, seed)


if __name__ == "__main__":
    logging.basicConfig(level=LabConfig.LOG_LEVEL)
    reports = Casebook().run_all(save=True)
    raise SystemExit(0 if all(r.passed for r in reports) else 1)
