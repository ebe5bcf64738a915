import json

import pytest

from utils.report_generator import ReportGenerator


def _case(case_id, passed=True, error=None):
    return {
        'case_id': case_id,
        'parameters': {'M': 64},
        'passed': passed,
        'error_message': error,
        'runtime': 0.5,
        'measurements': [
            {'name': 'density', 'value': 0.49, 'target': 0.5, 'tolerance': 0.02,
             'comparator': 'abs', 'provenance': 'literature', 'passed': passed},
        ]
    }


@pytest.fixture
def generator(results_dir):
    return ReportGenerator(str(results_dir))


def test_json_report(generator, results_dir):
    path = generator.save_json_report([_case('coset_complement')], '20260101_000000')
    assert path.endswith('vdc_casebook_20260101_000000.json')
    data = json.loads((results_dir / 'vdc_casebook_20260101_000000.json').read_text(encoding='utf-8'))
    assert data[0]['case_id'] == 'coset_complement'


def test_empty_report(generator):
    assert '沒有案例結果' in generator.generate_html_report([], 'now')


def test_html_report(generator):
    page = generator.generate_html_report([_case('coset_complement'), _case('<b>odd</b>', False, 'DomainError: x<1')],
                                          'now')
    assert 'coset_complement' in page
    assert '✅ 通過' in page
    assert '❌ 未通過' in page
    assert '<b>odd</b>' not in page
    assert '&lt;b&gt;odd&lt;/b&gt;' in page


def test_save_html(generator, results_dir):
    generator.save_html_report([_case('partition_regularity')], 'ts')
    assert 'partition_regularity' in (results_dir / 'vdc_casebook_ts.html').read_text(encoding='utf-8')


def test_statistics(generator):
    stats = generator._calculate_statistics([_case('a'), _case('b', False), _case('c', False, 'SolverError: x')])
    assert stats['total_cases'] == 3
    assert stats['passed_cases'] == 1
    assert stats['error_cases'] == 1
    assert stats['pass_rate'] == pytest.approx(100 / 3)
    assert stats['failed_measurements'] == 2
    assert stats['provenance_counts'] == {'literature': 3}
    assert stats['total_runtime'] == pytest.approx(1.5)
