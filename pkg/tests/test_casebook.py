import pytest

from casebook import COMPARATORS, Casebook, CaseReport, Measurement, run_case
from core.errors import UnknownCaseError


class TestMeasurement:
    @pytest.mark.parametrize("comparator,value,target,tol,expected", [
        ('abs', 0.51, 0.5, 0.02, True),
        ('abs', 0.55, 0.5, 0.02, False),
        ('ge', 0.3, 0.25, 0.0, True),
        ('ge', 0.2, 0.25, 0.0, False),
        ('le', 0.01, 0.05, 0.0, True),
        ('eq', 0.0, 0.0, 0.0, True),
        ('eq', 1e-15, 0.0, 0.0, False),
    ])
    def test_comparators(self, comparator, value, target, tol, expected):
        assert comparator in COMPARATORS
        assert Measurement('m', value, target, tol, 'derived', comparator).passed is expected

    def test_unknown_provenance(self):
        with pytest.raises(ValueError):
            Measurement('m', 0, 0, provenance='folklore')

    def test_report_requires_measurements(self):
        assert not CaseReport('x', {}).passed
        ok = CaseReport('x', {}, [Measurement('m', 1, 1)])
        assert ok.passed
        assert 'runtime' not in ok.to_dict(include_runtime=False)


class TestCases:
    @pytest.mark.parametrize("name", ['coset_complement', 'partition_regularity', 'difference_set_nice'])
    def test_exact_cases_pass(self, name):
        report = Casebook().run_case(name)
        assert report.error_message is None
        assert report.passed, [m.to_dict() for m in report.measurements if not m.passed]

    def test_finite_not_vdc(self):
        report = Casebook().run_case('finite_not_vdc', {'window_exponent': 12})
        assert report.passed, [m.to_dict() for m in report.measurements if not m.passed]
        names = [m.name for m in report.measurements]
        assert names[:2] == ['atom_lp_optimum', 'density_B']
        assert 'density_B_cap_B-3' in names

    def test_finite_not_vdc_set_matches_pattern_density(self):
        report = Casebook().run_case('finite_not_vdc', {'window_exponent': 12}, seed=5)
        by_name = {m.name: m.value for m in report.measurements}
        assert by_name['size_B_over_F'] == pytest.approx(by_name['density_B'], abs=1e-12)
        assert all(by_name[f'density_B_cap_B-{h}'] == 0.0 for h in (1, 2, 3))

    def test_difference_set_lhs(self):
        report = run_case('difference_set_nice')
        lhs = next(m for m in report.measurements if m.name == 'lhs')
        assert lhs.value == pytest.approx(64 / 25)

    def test_deterministic(self):
        book = Casebook()
        a = book.run_case('finite_not_vdc', {'window_exponent': 10}, seed=3)
        b = book.run_case('finite_not_vdc', {'window_exponent': 10}, seed=3)
        assert a.to_dict(include_runtime=False) == b.to_dict(include_runtime=False)

    def test_library_errors_are_reported(self):
        report = Casebook().run_case('finite_not_vdc', {'p': 1.5, 'window_exponent': 8})
        assert not report.passed
        assert report.error_message.startswith('DomainError')

    def test_unknown_case(self):
        with pytest.raises(UnknownCaseError):
            Casebook().run_case('no_such_case')
        with pytest.raises(UnknownCaseError):
            Casebook().run_all(['coset_complement', 'no_such_case'])

    def test_run_all_subset_keeps_order(self, results_dir):
        reports = Casebook().run_all(['difference_set_nice', 'coset_complement'], parallel=True)
        assert [r.case_id for r in reports] == ['difference_set_nice', 'coset_complement']

    def test_save_writes_reports(self, results_dir):
        book = Casebook()
        book.report_generator.results_dir = results_dir
        book.run_all(['coset_complement'], save=True)
        assert len(list(results_dir.glob('vdc_casebook_*.json'))) == 1
        assert len(list(results_dir.glob('vdc_casebook_*.html'))) == 1

    @pytest.mark.slow
    def test_all_cases_pass(self, results_dir):
        reports = Casebook().run_all(parallel=True)
        failed = {r.case_id: r.error_message or [m.name for m in r.measurements if not m.passed]
                  for r in reports if not r.passed}
        assert not failed
