#!/usr/bin/env python3
"""
案例集報告生成器
"""

import html
import json
import logging
from collections import defaultdict
from pathlib import Path
from typing import Dict, List

from config.lab_config import LabConfig

logger = logging.getLogger(__name__)


class ReportGenerator:
    """案例集報告生成器"""

    def __init__(self, results_dir: str = None):
        self.config = LabConfig
        self.results_dir = Path(results_dir or self.config.RESULTS_DIR)

    def save_json_report(self, results: List[Dict], timestamp: str) -> str:
        """保存 JSON 格式報告"""
        self.results_dir.mkdir(parents=True, exist_ok=True)
        filename = self.results_dir / f"vdc_casebook_{timestamp}.json"

        try:
            with open(filename, 'w', encoding='utf-8') as f:
                json.dump(results, f, ensure_ascii=False, indent=2)

            print(f"✅ JSON 報告已保存: {filename}")
            return str(filename)

        except OSError as e:
            logger.error(f"❌ 保存 JSON 報告失敗: {e}")
            return ""

    def save_html_report(self, results: List[Dict], timestamp: str) -> str:
        self.results_dir.mkdir(parents=True, exist_ok=True)
        filename = self.results_dir / f"vdc_casebook_{timestamp}.html"
        with open(filename, 'w', encoding='utf-8') as f:
            f.write(self.generate_html_report(results, timestamp))
        print(f"✅ HTML 報告已保存: {filename}")
        return str(filename)

    def generate_html_report(self, results: List[Dict], timestamp: str) -> str:
        """生成 HTML 案例報告（只回傳內容，由調用方保存）"""
        if not results:
            return self._generate_empty_report()

        stats = self._calculate_statistics(results)
        return self._generate_html_template(results, stats, timestamp)

    def _calculate_statistics(self, results: List[Dict]) -> Dict:
        """計算案例統計數據"""
        total = len(results)
        passed = [r for r in results if r.get('passed') and not r.get('error_message')]
        errored = [r for r in results if r.get('error_message')]

        provenance_counts = defaultdict(int)
        failed_measurements = 0
        for r in results:
            for m in r.get('measurements', []):
                provenance_counts[m.get('provenance', 'derived')] += 1
                if not m.get('passed'):
                    failed_measurements += 1

        return {
            'total_cases': total,
            'passed_cases': len(passed),
            'error_cases': len(errored),
            'pass_rate': len(passed) / total * 100 if total else 0.0,
            'total_runtime': sum(r.get('runtime', 0.0) for r in results),
            'failed_measurements': failed_measurements,
            'provenance_counts': dict(provenance_counts)
        }

    def _generate_empty_report(self) -> str:
        """生成空報告"""
        return """
        <!DOCTYPE html>
        <html lang="zh-TW">
        <head>
            <meta charset="UTF-8">
            <title>vdC 案例集報告</title>
        </head>
        <body>
            <h1>沒有案例結果</h1>
        </body>
        </html>
        """

    def _format_value(self, value) -> str:
        if isinstance(value, float):
            return f"{value:.6g}"
        if isinstance(value, list) and len(value) == 2 and all(isinstance(v, float) for v in value):
            return f"{value[0]:.6g}{value[1]:+.6g}i"
        return html.escape(str(value))

    def _generate_measurement_table(self, result: Dict) -> str:
        rows = ""
        for m in result.get('measurements', []):
            css = 'pass' if m.get('passed') else 'fail'
            mark = '✅' if m.get('passed') else '❌'
            rows += f"""
                    <tr class="{css}">
                        <td>{html.escape(m['name'])}</td>
                        <td>{self._format_value(m.get('value'))}</td>
                        <td>{html.escape(m.get('comparator', 'abs'))}</td>
                        <td>{self._format_value(m.get('target'))}</td>
                        <td>{self._format_value(m.get('tolerance'))}</td>
                        <td>{html.escape(m.get('provenance', ''))}</td>
                        <td>{mark}</td>
                    </tr>"""
        return f"""
                <div class="table-wrap">
                <table>
                    <tr><th>量測</th><th>數值</th><th>比較</th><th>目標</th><th>容差</th><th>來源</th><th>結果</th></tr>{rows}
                </table>
                </div>"""

    def _generate_html_template(self, results: List[Dict], stats: Dict, timestamp: str) -> str:
        """生成完整的 HTML 模板"""
        style = self.config.HTML_TEMPLATE_STYLE
        html_head = f"""
<!DOCTYPE html>
<html lang="zh-TW">
<head>
    <meta charset="UTF-8">
    <meta name="viewport" content="width=device-width, initial-scale=1.0">
    <title>vdC 案例集報告 - {timestamp}</title>
    <style>
        body {{
            font-family: 'Microsoft JhengHei', Arial, sans-serif;
            margin: 0;
            padding: 20px;
            background-color: #f5f5f5;
            line-height: 1.6;
        }}
        .container {{
            max-width: 1200px;
            margin: 0 auto;
            background-color: white;
            padding: 30px;
            border-radius: 10px;
            box-shadow: 0 2px 10px rgba(0,0,0,0.1);
        }}
        h1 {{
            color: #2c3e50;
            text-align: center;
            border-bottom: 3px solid {style['primary_color']};
            padding-bottom: 10px;
        }}
        .summary-grid {{
            display: grid;
            grid-template-columns: repeat(auto-fit, minmax(180px, 1fr));
            gap: 15px;
            margin: 20px 0;
        }}
        .summary-item {{
            background-color: #ecf0f1;
            padding: 15px;
            border-radius: 5px;
            text-align: center;
            border-left: 4px solid {style['primary_color']};
        }}
        .summary-item .value {{ font-size: 24px; font-weight: bold; color: #2c3e50; }}
        .summary-item .label {{ color: #7f8c8d; font-size: 14px; }}
        .case {{
            background-color: #fafafa;
            border: 1px solid #ddd;
            border-radius: 8px;
            margin: 20px 0;
            padding: 20px;
        }}
        .case-header {{
            color: white;
            padding: 10px 15px;
            border-radius: 5px;
            margin-bottom: 15px;
            display: flex;
            justify-content: space-between;
        }}
        .case-header.pass {{ background-color: {style['success_color']}; }}
        .case-header.fail {{ background-color: {style['error_color']}; }}
        .table-wrap {{ max-height: {style['table_max_height']}; overflow-y: auto; }}
        table {{ border-collapse: collapse; width: 100%; font-size: 14px; }}
        th, td {{ border: 1px solid #ddd; padding: 6px 10px; text-align: left; }}
        th {{ background-color: #ecf0f1; }}
        tr.fail td {{ color: {style['error_color']}; }}
        .error {{ color: {style['error_color']}; font-weight: bold; }}
        .params {{ color: #555; font-family: monospace; font-size: 13px; }}
    </style>
</head>
<body>
<div class="container">
    <h1>🧪 vdC 案例集報告</h1>
    <p style="text-align:center; color:#7f8c8d;">產生時間: {timestamp}</p>
    <div class="summary-grid">
        <div class="summary-item"><div class="value">{stats['total_cases']}</div><div class="label">案例總數</div></div>
        <div class="summary-item"><div class="value">{stats['passed_cases']}</div><div class="label">通過</div></div>
        <div class="summary-item"><div class="value">{stats['pass_rate']:.1f}%</div><div class="label">通過率</div></div>
        <div class="summary-item"><div class="value">{stats['total_runtime']:.1f}s</div><div class="label">總執行時間</div></div>
    </div>"""

        cards = ""
        for result in results:
            status = 'pass' if result.get('passed') else 'fail'
            mark = '✅ 通過' if result.get('passed') else '❌ 未通過'
            params = html.escape(json.dumps(result.get('parameters', {}), ensure_ascii=False))
            error = ""
            if result.get('error_message'):
                error = f'<p class="error">錯誤: {html.escape(result["error_message"])}</p>'
            cards += f"""
    <div class="case">
        <div class="case-header {status}">
            <strong>{html.escape(result['case_id'])}</strong>
            <span>{mark} · seed {result.get('seed')} · {result.get('runtime', 0.0):.2f}s</span>
        </div>
        <div class="params">{params}</div>{error}{self._generate_measurement_table(result)}
    </div>"""

        return html_head + cards + """
</div>
</body>
</html>
"""
