import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from core.averaging import (
    CorrelationEntry, CorrelationSpec, SequenceWindow, StarPolynomial, WitnessBundle,
    banach_density_estimate, cesaro_correlation, correlation_trace, limsup_over_H,
    nice_vdc_statistic, set_density, union_density, weyl_ud_test, window_average
)
from core.domains import Domain
from core.errors import CoverageError, DomainError
from core.lattice_group import FiniteLatticeSet, FolnerPlan, LatticeBox

GOLDEN = (np.sqrt(5) - 1) / 2


def _rotation_window(alpha, n):
    box = LatticeBox((0,), (n,))
    return SequenceWindow.from_function(box, lambda g: np.exp(2j * np.pi * alpha * g), Domain.circle())


def _evens(n):
    return FiniteLatticeSet.from_points(range(0, n, 2))


class TestStarPolynomial:
    def test_correlation_monomial(self):
        poly = StarPolynomial.correlation(2)
        z1, z2 = np.array([1j]), np.array([np.exp(0.3j)])
        assert poly.evaluate(z1, z2)[0] == pytest.approx((1j) ** 2 * np.conj(np.exp(0.3j)) ** 2)

    def test_indicator_pattern_values(self):
        poly = StarPolynomial.indicator_pattern([True, False])
        x = np.array([0, 0, 1, 1], dtype=complex)
        y = np.array([0, 1, 0, 1], dtype=complex)
        assert poly.evaluate(x, y).real.tolist() == [0, 0, 1, 0]

    def test_bound_checked_on_domain(self):
        assert StarPolynomial.indicator_pattern([True, False, True]).check_bound(Domain.unit_interval())
        assert StarPolynomial.product(3).check_bound(Domain.disc())

    def test_arity_mismatch(self):
        with pytest.raises(ValueError):
            StarPolynomial.product(2).evaluate(np.ones(3))

    def test_spec_json_roundtrip(self, z2_spec):
        again = CorrelationSpec.from_json(z2_spec.to_json())
        assert again.targets() == z2_spec.targets()
        assert [e.shifts for e in again.entries] == [e.shifts for e in z2_spec.entries]


class TestCesaroAverages:
    def test_constant_window(self):
        box = LatticeBox((0,), (20,))
        w = SequenceWindow.constant(box, 0.5, Domain.unit_interval())
        entry = CorrelationEntry.make([(0,), (3,)], StarPolynomial.product(2))
        assert cesaro_correlation(w, entry, LatticeBox((0,), (10,))) == pytest.approx(0.25)

    def test_rotation_autocorrelation_is_unimodular(self):
        w = _rotation_window(GOLDEN, 1000)
        entry = CorrelationEntry.make([(5,), (0,)], StarPolynomial.correlation())
        value = cesaro_correlation(w, entry, LatticeBox((0,), (500,)))
        assert abs(value) == pytest.approx(1.0)
        assert value == pytest.approx(np.exp(2j * np.pi * GOLDEN * 5))

    def test_window_must_cover_shifted_region(self):
        w = _rotation_window(GOLDEN, 10)
        entry = CorrelationEntry.make([(0,), (1,)], StarPolynomial.product(2))
        with pytest.raises(CoverageError):
            cesaro_correlation(w, entry, LatticeBox((0,), (10,)))

    def test_trace_indices(self):
        w = SequenceWindow.constant(LatticeBox((0,), (64,)), 1, Domain.binary())
        entry = CorrelationEntry.make([(0,)], StarPolynomial.identity())
        trace = correlation_trace(w, entry, FolnerPlan(), [4, 16, 64])
        assert [n for n, _ in trace] == [4, 16, 64]
        assert all(v == pytest.approx(1) for _, v in trace)

    @given(st.integers(0, 2 ** 32 - 1), st.integers(8, 60), st.floats(0.05, 0.5))
    @settings(max_examples=40, deadline=None)
    def test_adding_or_removing_few_points_moves_average_little(self, seed, size, delta):
        gen = np.random.default_rng(seed)
        box = LatticeBox((0,), (2 * size,))
        radius = gen.uniform(0, 1, 2 * size)
        w = SequenceWindow(box, radius * np.exp(2j * np.pi * gen.uniform(0, 1, 2 * size)), Domain.disc())
        E = FiniteLatticeSet.from_points(range(size))
        k = max(0, int(np.ceil(delta * size)) - 1)
        grown = E.union(FiniteLatticeSet.from_points(range(size, size + k), dim=1))
        shrunk = FiniteLatticeSet.from_points(range(size - k), dim=1) if k < size else None

        base = window_average(w, E)
        assert abs(window_average(w, grown) - base) < 2 * delta + 1e-12
        if shrunk is not None and len(shrunk):
            assert abs(window_average(w, shrunk) - base) < 2 * delta + 1e-12


class TestWeyl:
    def test_irrational_rotation_passes(self):
        w = _rotation_window(GOLDEN, 100_000)
        report = weyl_ud_test(w, 8, w.box, 0.01)
        assert report.passed
        assert report.first_failure_l is None

    def test_rational_rotation_fails_at_denominator(self):
        w = _rotation_window(1 / 3, 100_000)
        report = weyl_ud_test(w, 6, w.box, 0.01)
        assert not report.passed
        assert report.first_failure_l == 3
        assert report.values[2] == pytest.approx(1.0)

    def test_requires_circle_window(self):
        w = SequenceWindow.constant(LatticeBox((0,), (4,)), 1, Domain.binary())
        with pytest.raises(DomainError):
            weyl_ud_test(w, 2, w.box, 0.01)


class TestSetDensity:
    def test_evens(self):
        A = _evens(102)
        F = LatticeBox((0,), (100,))
        U = LatticeBox((0,), (102,))
        assert set_density(A, [((0,), True)], F, U) == pytest.approx(0.5)
        assert set_density(A, [((0,), True), ((1,), True)], F, U) == pytest.approx(0.0)
        assert set_density(A, [((0,), True), ((1,), False)], F, U) == pytest.approx(0.5)
        assert set_density(A, [((0,), True), ((2,), True)], F, U) == pytest.approx(0.5)

    def test_default_universe(self):
        A = _evens(100)
        assert set_density(A, [((0,), True), ((1,), False)], LatticeBox((0,), (100,))) == pytest.approx(0.5)

    def test_union(self):
        A = _evens(102)
        U = LatticeBox((0,), (102,))
        assert union_density(A, [(0,), (1,)], LatticeBox((0,), (100,)), U) == pytest.approx(1.0)

    def test_set_outside_universe(self):
        A = FiniteLatticeSet.from_points([500])
        with pytest.raises(CoverageError):
            set_density(A, [((0,), True)], LatticeBox((0,), (10,)), LatticeBox((0,), (20,)))

    def test_banach_density(self):
        A = FiniteLatticeSet.from_points(list(range(10)) + list(range(20, 100, 2)))
        assert banach_density_estimate(A, LatticeBox((0,), (100,)), 10) == pytest.approx(1.0)
        assert banach_density_estimate(A, LatticeBox((0,), (100,)), 100) == pytest.approx(0.5)


class TestNiceVdc:
    def test_limsup_proxy(self):
        values = [0.5, 0.1, 0.3, 0.05]
        assert limsup_over_H(values, 0) == pytest.approx(0.5)
        assert limsup_over_H(values, 2) == pytest.approx(0.3)
        with pytest.raises(ValueError):
            limsup_over_H(values, 4)

    def test_constant_window_holds(self):
        w = SequenceWindow.constant(LatticeBox((0,), (200,)), 1, Domain.binary())
        report = nice_vdc_statistic(w, [(1,), (2,), (3,)], LatticeBox((0,), (100,)), 1)
        assert report.mean_square == pytest.approx(1.0)
        assert report.holds


class TestWitnessBundle:
    def test_statistic_and_discrepancy(self):
        box = LatticeBox((0,), (12,))
        ones = SequenceWindow.constant(box, 1, Domain.binary())
        zeros = SequenceWindow.constant(box, 0, Domain.binary())
        bundle = WitnessBundle((ones, zeros), LatticeBox((0,), (8,)))
        mean = CorrelationEntry.make([(0,)], StarPolynomial.identity(), target=0.5)
        pair = CorrelationEntry.make([(0,), (1,)], StarPolynomial.product(2), target=0.4)
        assert bundle.K == 2
        assert bundle.statistic(mean) == pytest.approx(0.5)
        assert bundle.discrepancy(CorrelationSpec((mean, pair))) == pytest.approx(0.1)

    def test_region_must_be_covered(self):
        w = SequenceWindow.constant(LatticeBox((0,), (4,)), 1, Domain.binary())
        with pytest.raises(CoverageError):
            WitnessBundle((w,), LatticeBox((0,), (8,)))
