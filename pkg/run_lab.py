#!/usr/bin/env python3
"""
vdC 實驗室命令列
使用方法: python3 run_lab.py --help
結束碼: 0 全部通過、1 有未通過的判準、2 輸入錯誤
"""

import json
import logging
import os
import sys

import click

# 添加專案根目錄
current_dir = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, current_dir)

from config.lab_config import LabConfig
from core.averaging import CorrelationEntry, StarPolynomial, cesaro_correlation, weyl_ud_test
from core.correspondence import IidSpec, inverse_furstenberg, synthesize_sequence
from core.domains import Domain
from core.errors import ConvergenceError, SolverError, UnknownCaseError, WitnessError
from core.lattice_group import FolnerPlan, LatticeBox
from core.randomization import SeededRng, WhiteNoiseWitnessSource, white_noise_envelope, white_noise_window
from core.spectral_lp import dual_cosine_certificate, primal_atom_lp, vdc_evidence
from utils import lab_io

logger = logging.getLogger(__name__)

INPUT_ERRORS = (OSError, ValueError, KeyError, json.JSONDecodeError)
RUN_ERRORS = (WitnessError, ConvergenceError, SolverError)


class InputError(click.ClickException):
    """輸入錯誤，結束碼 2"""
    exit_code = 2

    def show(self, file=None):
        click.echo(f"❌ 輸入錯誤: {self.message}", err=True)


def _fail(message: str):
    click.echo(f"❌ {message}", err=True)
    sys.exit(1)


def _finish(passed: bool):
    sys.exit(0 if passed else 1)


def _load_source(mps_path, iid_p, white_noise):
    chosen = [x for x in (mps_path, iid_p, white_noise or None) if x is not None]
    if len(chosen) != 1:
        raise InputError("必須恰好指定 --mps、--iid 或 --white-noise 其中之一")
    if mps_path:
        return lab_io.read_mps(mps_path)
    if iid_p is not None:
        return IidSpec(iid_p)
    return WhiteNoiseWitnessSource()


@click.group()
@click.option('--log-level', default=None, help='日誌等級 (預設讀取 VDC_LAB_LOG_LEVEL)')
def cli(log_level):
    """vdC 集合與逆 Furstenberg 對應實驗室"""
    logging.basicConfig(level=(log_level or LabConfig.LOG_LEVEL).upper(),
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')


# ================================================================
# synthesize
# ================================================================

@cli.command()
@click.option('--spec', 'spec_path', required=True, type=click.Path(), help='相關規格 JSON')
@click.option('--mps', 'mps_path', type=click.Path(), help='有限保測系統 JSON')
@click.option('--iid', 'iid_p', type=float, help='iid Bernoulli(p) 見證')
@click.option('--white-noise', is_flag=True, help='白噪聲見證')
@click.option('--horizon', required=True, type=int, help='Følner 指標 N')
@click.option('--seed', default=None, type=int)
@click.option('--epsilon', default=None, type=float)
@click.option('--out', type=click.Path(), help='輸出視窗 CSV')
@click.option('--trace-json', type=click.Path(), help='輸出驗證軌跡（.json 或 .csv）')
def synthesize(spec_path, mps_path, iid_p, white_noise, horizon, seed, epsilon, out, trace_json):
    """由見證合成序列並驗證相關"""
    try:
        spec = lab_io.read_spec(spec_path)
        source = _load_source(mps_path, iid_p, white_noise)
        if isinstance(source, IidSpec):
            if not spec.has_targets():
                spec = spec.with_targets([source.correlation(e) for e in spec.entries])
            source = source.witness_source()
        rng = SeededRng(LabConfig.DEFAULT_SEED if seed is None else seed)
        result = synthesize_sequence(spec, source, horizon, epsilon=epsilon, rng=rng)
    except RUN_ERRORS as e:
        _fail(str(e))
    except INPUT_ERRORS as e:
        raise InputError(str(e))

    if out:
        lab_io.write_window_csv(result.window, out)
    if trace_json:
        lab_io.write_trace(result.trace, trace_json)
    for n, err in result.envelope()[-4:]:
        click.echo(f"N={n:>8}  最大誤差 {err:.4g}")
    mark = '✅' if result.passed else '❌'
    click.echo(f"{mark} 最終誤差 {result.final_error:.4g} / 容差 {result.bound:.4g}")
    _finish(result.passed)


# ================================================================
# ifc
# ================================================================

@cli.command()
@click.option('--mps', 'mps_path', type=click.Path(), help='{0,1} 觀測量的有限保測系統 JSON')
@click.option('--iid', 'iid_p', type=float, help='iid Bernoulli(p)')
@click.option('--shifts', default='', help="平移族，例如 '0,1;0,~2'")
@click.option('--unions', default='', help="聯集族，例如 '0,1,2;0,3'")
@click.option('--horizon', required=True, type=int)
@click.option('--seed', default=None, type=int)
@click.option('--out', type=click.Path(), help='輸出集合 A（.json 或 .csv）')
@click.option('--json', 'as_json', is_flag=True, help='以 JSON 輸出報告')
def ifc(mps_path, iid_p, shifts, unions, horizon, seed, out, as_json):
    """逆 Furstenberg 對應：由系統構造集合 A"""
    try:
        source = _load_source(mps_path, iid_p, False)
        families = lab_io.parse_shift_families(shifts) if shifts.strip() else []
        union_families = ([[h for h, _ in fam] for fam in lab_io.parse_shift_families(unions)]
                          if unions.strip() else [])
        if not families and not union_families:
            raise InputError("至少需要 --shifts 或 --unions")
        rng = SeededRng(LabConfig.DEFAULT_SEED if seed is None else seed)
        result = inverse_furstenberg(source, families, horizon, unions=union_families, rng=rng)
    except RUN_ERRORS as e:
        _fail(str(e))
    except INPUT_ERRORS as e:
        raise InputError(str(e))

    if out:
        lab_io.write_lattice_set(result.A, out)
    if as_json:
        click.echo(json.dumps(result.to_dict(), ensure_ascii=False, indent=2))
    else:
        for row in result.rows:
            click.echo(f"{row.kind:>12}  密度 {row.density:.4f}  目標 {row.target:.4f}  偏差 {row.deviation:.4f}")
    _finish(result.passed())


# ================================================================
# spectral
# ================================================================

@cli.command()
@click.option('--set', 'expr', required=True, help='H 運算式，例如 squares:<=8')
@click.option('--grid', 'M', required=True, type=int, help='格點解析度 M')
@click.option('--truncate', default=None, help='截斷大小 K，或以逗號分隔的排程')
@click.option('--radius', default=0, type=int, help='最大化 0 的 r 格鄰域質量（只輸出原始最佳值）')
@click.option('--json', 'as_json', is_flag=True)
def spectral(expr, M, truncate, radius, as_json):
    """以原子質量線性規劃收集 vdC 證據"""
    try:
        H = lab_io.parse_h_expression(expr)
        sizes = [int(k) for k in truncate.split(',')] if truncate else [len(H)]
        if radius:
            value, measure = primal_atom_lp(H[:sizes[-1]], M, radius=radius)
            payload = {'radius': radius, 'primal_value': value, 'measure': measure.to_json()}
            passed = True
        elif len(sizes) == 1:
            cert = dual_cosine_certificate(H[:sizes[0]], M)
            payload = cert.to_json()
            passed = cert.gap <= LabConfig.DUALITY_GAP_TOLERANCE
        else:
            report = vdc_evidence(H, sizes, [M], description=expr)
            payload = report.to_dict()
            passed = max(report.gaps) <= LabConfig.DUALITY_GAP_TOLERANCE
    except RUN_ERRORS as e:
        _fail(str(e))
    except INPUT_ERRORS as e:
        raise InputError(str(e))

    if as_json:
        click.echo(json.dumps(payload, ensure_ascii=False, indent=2))
    elif 'verdict' in payload:
        for row in payload['optima']:
            click.echo(f"|H₀|={row['size']:>4}  M={row['M']:>5}  最佳值 {row['optimum']:.6f}")
        click.echo(f"判定: {payload['verdict']} (下界 {payload['floor']:.6f})")
    elif 'radius' in payload:
        click.echo(f"半徑 {radius} 鄰域最佳值 {payload['primal_value']:.6f}")
    else:
        click.echo(f"原子最佳值 {payload['primal_value']:.6f}  ε = {payload['epsilon']}  間隙 {payload['gap']:.3g}")
    _finish(passed)


# ================================================================
# weyl / whitenoise
# ================================================================

@cli.command()
@click.option('--window', 'window_path', required=True, type=click.Path())
@click.option('--lmax', required=True, type=int)
@click.option('--tol', default=0.01, type=float)
def weyl(window_path, lmax, tol):
    """單位圓視窗的 Weyl 均勻分佈檢定"""
    try:
        w = lab_io.read_window(window_path)
        if w.domain != Domain.circle():
            w = w.relabel(Domain.circle())
        report = weyl_ud_test(w, lmax, w.box, tol)
    except INPUT_ERRORS as e:
        raise InputError(str(e))
    click.echo(json.dumps(report.to_dict(), ensure_ascii=False, indent=2))
    _finish(report.passed)


@cli.command()
@click.option('--n', 'n', required=True, type=int, help='視窗長度')
@click.option('--seed', default=None, type=int)
@click.option('--max-shift', default=5, type=int)
@click.option('--max-power', default=2, type=int)
def whitenoise(n, seed, max_shift, max_power):
    """白噪聲視窗的多重相關檢查"""
    if n < 1 or max_shift < 1 or max_power < 1:
        raise InputError("n、max-shift 與 max-power 必須為正")
    rng = SeededRng(LabConfig.DEFAULT_SEED if seed is None else seed)
    w = white_noise_window(LatticeBox((0,), (n + max_shift,)), rng)
    F = FolnerPlan(dim=1).box(n)
    envelope = white_noise_envelope(n)
    passed = True
    for h in range(1, max_shift + 1):
        for l in range(1, max_power + 1):
            e = CorrelationEntry.make([(0,), (h,)], StarPolynomial.correlation(l))
            value = abs(cesaro_correlation(w, e, F))
            ok = value <= envelope
            passed &= ok
            click.echo(f"{'✅' if ok else '❌'} h={h} l={l}  |avg| = {value:.5f}  包絡 {envelope:.5f}")
    _finish(passed)


# ================================================================
# casebook
# ================================================================

@cli.group()
def casebook():
    """具名案例"""


@casebook.command('run')
@click.argument('name')
@click.option('--seed', default=None, type=int)
@click.option('--json', 'as_json', is_flag=True)
@click.option('--parallel', is_flag=True, help='並行執行所有案例')
@click.option('--save', is_flag=True, help='保存 JSON 與 HTML 報告')
def casebook_run(name, seed, as_json, parallel, save):
    """執行 NAME 或 all"""
    from casebook import Casebook

    book = Casebook()
    try:
        if name == 'all':
            reports = book.run_all(seed=seed, parallel=parallel, save=save)
        else:
            reports = [book.run_case(name, seed=seed)]
    except UnknownCaseError:
        raise InputError(f"未知的案例: {name}（可用: {', '.join(book.names)}）")

    if as_json:
        click.echo(json.dumps([r.to_dict() for r in reports], ensure_ascii=False, indent=2))
    else:
        for report in reports:
            mark = '✅' if report.passed else '❌'
            click.echo(f"{mark} {report.case_id}")
            for m in report.measurements:
                click.echo(f"    {'✅' if m.passed else '❌'} {m.name}: {m.value:.6g} ({m.comparator} {m.target:.6g} ± {m.tolerance:.3g})")
            if report.error_message:
                click.echo(f"    ❌ {report.error_message}")
    _finish(all(r.passed for r in reports))


if __name__ == "__main__":
    cli()
