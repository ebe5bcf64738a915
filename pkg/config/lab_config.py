#!/usr/bin/env python3
"""
vdC 實驗室配置
從 .env 檔案載入所有數值容差、上限與輸出設定
"""

import os
from pathlib import Path
from dotenv import load_dotenv

# 載入環境變數 - 從模組內的 .env 檔案
env_path = Path(__file__).parent.parent / '.env'
load_dotenv(env_path)


class LabConfig:
    """vdC 實驗室配置類"""

    # ===========================================
    # 輸出與隨機種子
    # ===========================================
    RESULTS_DIR = os.getenv('VDC_LAB_RESULTS_DIR', './results')
    DEFAULT_SEED = int(os.getenv('VDC_LAB_SEED', '20240607'))
    LOG_LEVEL = os.getenv('VDC_LAB_LOG_LEVEL', 'INFO')
    MAX_WORKERS = int(os.getenv('VDC_LAB_MAX_WORKERS', '4'))

    # ===========================================
    # 數值容差
    # ===========================================
    DOMAIN_TOLERANCE = float(os.getenv('VDC_LAB_DOMAIN_TOL', '1e-12'))
    HULL_TOLERANCE = float(os.getenv('VDC_LAB_HULL_TOL', '1e-9'))
    WEIGHT_TOLERANCE = float(os.getenv('VDC_LAB_WEIGHT_TOL', '1e-12'))
    GRID_WEIGHT_TOLERANCE = float(os.getenv('VDC_LAB_GRID_WEIGHT_TOL', '1e-10'))
    CERTIFICATE_TOLERANCE = float(os.getenv('VDC_LAB_CERT_TOL', '1e-8'))

    # ===========================================
    # 線性規劃 (稠密單純形法)
    # ===========================================
    SIMPLEX_MAX_ITERATIONS = int(os.getenv('VDC_LAB_SIMPLEX_MAX_ITER', '1000000'))
    SIMPLEX_TOLERANCE = float(os.getenv('VDC_LAB_SIMPLEX_TOL', '1e-10'))
    DUALITY_GAP_TOLERANCE = float(os.getenv('VDC_LAB_DUALITY_GAP_TOL', '1e-6'))
    VDC_THRESHOLD = float(os.getenv('VDC_LAB_VDC_THRESHOLD', '0.05'))

    # ===========================================
    # 合成與見證
    # ===========================================
    MAX_DENOMINATOR = int(os.getenv('VDC_LAB_MAX_DENOMINATOR', '10000'))
    SYNTHESIS_EPSILON = float(os.getenv('VDC_LAB_SYNTH_EPSILON', '0.05'))
    WITNESS_RETRIES = int(os.getenv('VDC_LAB_WITNESS_RETRIES', '20'))
    LIFT_MAX_COPIES = int(os.getenv('VDC_LAB_LIFT_MAX_COPIES', '10000'))
    MAX_TILE_LEVEL = int(os.getenv('VDC_LAB_MAX_TILE_LEVEL', '20'))

    # ===========================================
    # 案例集
    # ===========================================
    CASE_TOLERANCE = float(os.getenv('VDC_LAB_CASE_TOL', '0.02'))
    CASE_HORIZON_EXPONENT = int(os.getenv('VDC_LAB_CASE_HORIZON_EXP', '16'))

    # ===========================================
    # HTML 報告設定
    # ===========================================
    HTML_TEMPLATE_STYLE = {
        'table_max_height': os.getenv('HTML_TABLE_MAX_HEIGHT', '400px'),
        'primary_color': os.getenv('HTML_PRIMARY_COLOR', '#3498db'),
        'success_color': os.getenv('HTML_SUCCESS_COLOR', '#27ae60'),
        'warning_color': os.getenv('HTML_WARNING_COLOR', '#f39c12'),
        'error_color': os.getenv('HTML_ERROR_COLOR', '#e74c3c')
    }

    @classmethod
    def validate_config(cls) -> bool:
        """驗證配置是否合理"""
        positive_fields = [
            'DOMAIN_TOLERANCE',
            'HULL_TOLERANCE',
            'WEIGHT_TOLERANCE',
            'GRID_WEIGHT_TOLERANCE',
            'SIMPLEX_TOLERANCE',
            'DUALITY_GAP_TOLERANCE',
            'VDC_THRESHOLD',
            'SYNTHESIS_EPSILON',
            'CASE_TOLERANCE',
            'MAX_DENOMINATOR',
            'SIMPLEX_MAX_ITERATIONS',
            'LIFT_MAX_COPIES',
            'WITNESS_RETRIES',
            'MAX_WORKERS'
        ]

        invalid_fields = [field for field in positive_fields if not getattr(cls, field) > 0]
        if invalid_fields:
            print(f"❌ 配置必須為正數: {', '.join(invalid_fields)}")
            return False

        if cls.SYNTHESIS_EPSILON >= 1:
            print(f"❌ VDC_LAB_SYNTH_EPSILON 必須小於 1: {cls.SYNTHESIS_EPSILON}")
            return False

        if cls.HULL_TOLERANCE < cls.DOMAIN_TOLERANCE:
            print("⚠️ 凸包容差小於定義域容差，convexify 可能拒絕邊界值")

        if not 0 <= cls.MAX_TILE_LEVEL <= 20:
            print(f"❌ VDC_LAB_MAX_TILE_LEVEL 必須介於 0 與 20: {cls.MAX_TILE_LEVEL}")
            return False

        # 創建結果目錄
        Path(cls.RESULTS_DIR).mkdir(parents=True, exist_ok=True)

        print("✅ 配置驗證通過")
        return True

    @classmethod
    def print_config(cls):
        """打印當前配置"""
        print("=" * 50)
        print("vdC 實驗室配置")
        print("=" * 50)
        print(f"結果目錄: {cls.RESULTS_DIR}")
        print(f"預設種子: {cls.DEFAULT_SEED}")
        print(f"日誌等級: {cls.LOG_LEVEL}")
        print(f"定義域容差: {cls.DOMAIN_TOLERANCE}")
        print(f"凸包容差: {cls.HULL_TOLERANCE}")
        print(f"有理化分母上限: {cls.MAX_DENOMINATOR}")
        print(f"單純形迭代上限: {cls.SIMPLEX_MAX_ITERATIONS}")
        print(f"對偶間隙容差: {cls.DUALITY_GAP_TOLERANCE}")
        print(f"vdC 判定門檻: {cls.VDC_THRESHOLD}")
        print(f"合成容差 ε: {cls.SYNTHESIS_EPSILON}")
        print(f"提升副本上限: {cls.LIFT_MAX_COPIES}")
        print(f"案例容差: {cls.CASE_TOLERANCE}")
        print("=" * 50)
