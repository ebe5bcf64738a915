#!/usr/bin/env python3
"""
生成範例輸入檔（規格、有限保測系統、H 檔）
"""

import os
import sys
from pathlib import Path

current_dir = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, current_dir)

from core.averaging import CorrelationEntry, CorrelationSpec, StarPolynomial
from core.correspondence import identity_mps, rotation_mps
from utils import lab_io


def z2_rotation_spec() -> CorrelationSpec:
    """Z_2 旋轉: 平均 1/2、平移 1 的相關 0"""
    return CorrelationSpec((
        CorrelationEntry.make([(0,)], StarPolynomial.identity(), target=0.5, label='mean'),
        CorrelationEntry.make([(0,), (1,)], StarPolynomial.product(2), target=0.0, label='pair h=1'),
    ))


def create_example_inputs(out_dir: str = 'examples_input') -> dict:
    """在 out_dir 寫入範例檔，回傳 名稱 → 路徑"""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    files = {
        'spec': lab_io.write_spec(z2_rotation_spec(), out / 'z2_rotation_spec.json'),
        'z2': lab_io.write_mps(rotation_mps(2), out / 'z2_rotation_mps.json'),
        'z3': lab_io.write_mps(rotation_mps(3), out / 'z3_rotation_mps.json'),
        'identity': lab_io.write_mps(identity_mps([0.5, 0.5], [1, 0]), out / 'identity_half_mps.json'),
    }

    h_file = out / 'squares_H.txt'
    with open(h_file, 'w', encoding='utf-8') as f:
        f.write("# 前 8 個平方數\n")
        for n in range(1, 9):
            f.write(f"{n * n}\n")
    files['H'] = str(h_file)

    print(f"✅ 範例輸入已建立於: {out}")
    for name, path in files.items():
        print(f"   - {name}: {path}")
    return files


if __name__ == "__main__":
    print("🚀 建立範例輸入")
    print("=" * 50)
    target = sys.argv[1] if len(sys.argv) > 1 else 'examples_input'
    create_example_inputs(target)
    print("\n💡 使用說明:")
    print(f"   python3 run_lab.py synthesize --spec {target}/z2_rotation_spec.json "
          f"--mps {target}/z2_rotation_mps.json --horizon 65536")
    print(f"   python3 run_lab.py spectral --set file:{target}/squares_H.txt --grid 256 --truncate 2,4,6,8")
