import json

import numpy as np
import pytest

from core.averaging import SequenceWindow
from core.correspondence import TraceRow
from core.domains import Domain
from core.lattice_group import FiniteLatticeSet, LatticeBox
from create_example_inputs import create_example_inputs
from utils import lab_io


class TestHExpression:
    @pytest.mark.parametrize("expr,expected", [
        ('finite:1,2,3', [(1,), (2,), (3,)]),
        ('finite:1:0, 0:1', [(1, 0), (0, 1)]),
        ('squares:<=4', [(1,), (4,), (9,), (16,)]),
        ('range:-2..2', [(-2,), (-1,), (1,), (2,)]),
        ('multiples:3<=3', [(3,), (6,), (9,)]),
        ('multiples:-2<=2', [(-2,), (-4,)]),
    ])
    def test_variants(self, expr, expected):
        assert lab_io.parse_h_expression(expr) == expected

    @pytest.mark.parametrize("expr", ['finite:', 'squares:8', 'range:1-5', 'multiples:0<=4', 'cubes:<=3'])
    def test_malformed(self, expr):
        with pytest.raises(ValueError):
            lab_io.parse_h_expression(expr)

    def test_file_with_comments(self, tmp_path):
        path = tmp_path / 'H.txt'
        path.write_text("# 平方數\n1\n4\n9\n", encoding='utf-8')
        assert lab_io.parse_h_expression(f'file:{path}') == [(1,), (4,), (9,)]

    def test_two_dimensional_file(self, tmp_path):
        path = tmp_path / 'H2.txt'
        path.write_text("1 0\n0,1\n2 3\n", encoding='utf-8')
        assert lab_io.parse_h_expression(f'file:{path}') == [(1, 0), (0, 1), (2, 3)]

    def test_missing_file(self, tmp_path):
        with pytest.raises(ValueError):
            lab_io.parse_h_expression(f'file:{tmp_path / "nope.txt"}')


class TestShiftFamilies:
    def test_complements_and_separators(self):
        families = lab_io.parse_shift_families('0,1; 0,~2')
        assert families == [[((0,), True), ((1,), True)], [((0,), True), ((2,), False)]]

    def test_multidimensional(self):
        assert lab_io.parse_shift_families('0:0,~1:-1') == [[((0, 0), True), ((1, -1), False)]]

    @pytest.mark.parametrize("text", ['', ' ; '])
    def test_empty(self, text):
        with pytest.raises(ValueError):
            lab_io.parse_shift_families(text)


class TestWindows:
    def _window(self):
        box = LatticeBox((-1, 2), (3, 2))
        return SequenceWindow.from_function(box, lambda a, b: np.exp(1j * (a + 2 * b)), Domain.circle())

    def test_csv(self, tmp_path):
        w = self._window()
        path = lab_io.write_window_csv(w, tmp_path / 'w.csv')
        again = lab_io.read_window(path)
        assert again.box == w.box
        assert np.allclose(again.values, w.values)
        assert again.domain == Domain.circle()

    def test_json_keeps_domain(self, tmp_path):
        box = LatticeBox((0,), (5,))
        w = SequenceWindow.constant(box, 0.25, Domain.unit_interval())
        again = lab_io.read_window(lab_io.write_window_json(w, tmp_path / 'w.json'))
        assert again.domain == Domain.unit_interval()
        assert np.allclose(again.values, 0.25)

    def test_incomplete_csv(self, tmp_path):
        path = tmp_path / 'holes.csv'
        path.write_text("x0,re,im\n0,1,0\n2,1,0\n", encoding='utf-8')
        with pytest.raises(ValueError):
            lab_io.read_window_csv(path)

    def test_missing_columns(self, tmp_path):
        path = tmp_path / 'bad.csv'
        path.write_text("a,b\n0,1\n", encoding='utf-8')
        with pytest.raises(ValueError):
            lab_io.read_window_csv(path)


class TestLatticeSets:
    @pytest.mark.parametrize("suffix", ['.csv', '.json'])
    def test_roundtrip(self, tmp_path, suffix):
        A = FiniteLatticeSet.from_points([(3, -1), (0, 0), (5, 2)])
        path = lab_io.write_lattice_set(A, tmp_path / f'A{suffix}')
        again = lab_io.read_lattice_set(path, dim=2)
        assert sorted(again.to_json()) == sorted(A.to_json())


class TestTrace:
    def test_csv_columns(self, tmp_path):
        trace = [TraceRow(N=16, entry=0, value=0.5 + 0j, target=0.5 + 0j),
                 TraceRow(N=32, entry=1, value=0.01j, target=0j)]
        frame = lab_io.trace_frame(trace)
        assert list(frame.columns) == ['N', 'entry', 'value_re', 'value_im', 'target_re', 'target_im', 'abs_err']
        assert frame['value_im'].tolist() == [0.0, 0.01]
        path = lab_io.write_trace(trace, tmp_path / 't.json')
        assert json.loads(open(path, encoding='utf-8').read())[1]['N'] == 32


class TestExampleInputs:
    def test_files_load(self, tmp_path):
        files = create_example_inputs(str(tmp_path))
        assert set(files) == {'spec', 'z2', 'z3', 'identity', 'H'}
        spec = lab_io.read_spec(files['spec'])
        assert [e.target for e in spec.entries] == [0.5, 0.0]
        assert len(lab_io.read_mps(files['z3']).weights) == 3
        assert lab_io.read_mps(files['identity']).is_indicator()
        assert lab_io.parse_h_expression(f"file:{files['H']}") == [(n * n,) for n in range(1, 9)]
