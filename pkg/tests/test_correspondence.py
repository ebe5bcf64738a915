from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from core.averaging import CorrelationEntry, CorrelationSpec, StarPolynomial, cesaro_correlation
from core.domains import Domain
from core.errors import DomainError, RationalizationError, ScheduleError, WitnessError
from core.lattice_group import FolnerPlan, LatticeBox
from core.correspondence import (
    FiniteMPS, IidSpec, SynthesisSchedule, bernoulli_iid, default_schedule, duplicate_real_imag,
    finitistic_witnesses, identity_mps, inverse_furstenberg, mps_correlation, product_mps,
    rationalize_weights, rotation_mps, semigroup_ifc, synthesize_sequence, union_ifc
)
from core.randomization import SeededRng, white_noise_witness_source


def _pair(h, poly=None):
    return CorrelationEntry.make([(0,), (h,)], poly or StarPolynomial.product(2))


MEAN = CorrelationEntry.make([(0,)], StarPolynomial.identity())


class TestFiniteMPS:
    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError):
            FiniteMPS([0.5, 0.4], [[0, 1]], [1, 0])

    def test_generator_must_be_permutation(self):
        with pytest.raises(ValueError):
            FiniteMPS([0.5, 0.5], [[0, 0]], [1, 0])

    def test_generator_must_preserve_weights(self):
        with pytest.raises(ValueError):
            FiniteMPS([0.7, 0.3], [[1, 0]], [1, 0])

    def test_generators_must_commute(self):
        third = [1 / 3] * 3
        with pytest.raises(ValueError):
            FiniteMPS(third, [[1, 0, 2], [0, 2, 1]], [1, 0, 0])

    def test_act_with_negative_shift(self):
        m = rotation_mps(5)
        assert m.act((3,)).tolist() == ((np.arange(5) + 3) % 5).tolist()
        assert m.act((-2,)).tolist() == ((np.arange(5) - 2) % 5).tolist()

    def test_orbit_table_2d(self):
        m = rotation_mps(3, dim=2, observable=np.arange(9) / 9)
        box = LatticeBox((-1, 2), (4, 3))
        table = m.orbit_table(box)
        assert table.shape == (9, 4, 3)
        for x in range(9):
            for i, a0 in enumerate(range(-1, 3)):
                for j, a1 in enumerate(range(2, 5)):
                    assert table[x, i, j] == m.observable[m.act((a0, a1))[x]]

    def test_json_accepts_fractions(self):
        data = rotation_mps(3).to_json()
        data['weights'] = ['1/3', '1/3', '1/3']
        again = FiniteMPS.from_json(data)
        assert again.weights == pytest.approx([float(Fraction(1, 3))] * 3)
        assert np.array_equal(again.generators[0], rotation_mps(3).generators[0])


class TestCorrelations:
    def test_z2_rotation(self, z2_mps):
        assert mps_correlation(z2_mps, MEAN) == pytest.approx(0.5)
        assert mps_correlation(z2_mps, _pair(1)) == pytest.approx(0.0)
        assert mps_correlation(z2_mps, _pair(2)) == pytest.approx(0.5)

    @given(st.integers(1, 6), st.integers(1, 6), st.integers(-4, 4))
    @settings(max_examples=30, deadline=None)
    def test_product_system_factorizes(self, q1, q2, h):
        m1, m2 = rotation_mps(q1), rotation_mps(q2)
        e = _pair(h, StarPolynomial.correlation())
        expected = mps_correlation(m1, e) * mps_correlation(m2, e)
        assert mps_correlation(product_mps(m1, m2), e) == pytest.approx(expected)

    @pytest.mark.parametrize("h", [0, 1, 2, 3])
    def test_real_imag_duplication(self, h):
        m = rotation_mps(4, observable=0.9 * np.round(1j ** np.arange(4)))
        dup = duplicate_real_imag(m)
        lhs = mps_correlation(dup, CorrelationEntry.make([(h,), (0,)], StarPolynomial.product(2)))
        rhs = 0.5 * mps_correlation(m, CorrelationEntry.make([(h,), (0,)], StarPolynomial.correlation())).real
        assert lhs.real == pytest.approx(rhs)
        assert dup.domain().tag.value in ('symmetric_interval', 'unit_interval')

    def test_iid_formulas(self):
        iid = bernoulli_iid(0.3)
        assert iid.correlation(MEAN) == pytest.approx(0.3)
        assert iid.correlation(_pair(1)) == pytest.approx(0.09)
        assert iid.correlation(_pair(0)) == pytest.approx(0.3)
        assert iid.family_measure([((0,), True), ((2,), False)]) == pytest.approx(0.21)
        assert iid.family_measure([((1,), True), ((1,), False)]) == 0.0
        with pytest.raises(ValueError):
            IidSpec(1.5)


class TestWitnesses:
    def test_rationalize_exact(self):
        Q, counts, tv = rationalize_weights(np.array([1 / 3, 2 / 3]), 1e-9)
        assert Q == 3
        assert counts.tolist() == [1, 2]
        assert tv < 1e-9

    def test_rationalize_fails_with_small_denominator(self):
        with pytest.raises(RationalizationError):
            rationalize_weights(np.array([1 / np.pi, 1 - 1 / np.pi]), 1e-9, max_denominator=50)

    def test_finitistic_witnesses_match_system(self, z2_mps, z2_spec):
        bundle = finitistic_witnesses(z2_mps, z2_spec, LatticeBox((0,), (64,)), 0.01)
        assert bundle.K == 2
        assert bundle.discrepancy(z2_spec) < 0.01

    def test_witness_targets_checked(self, z2_mps):
        wrong = CorrelationSpec((MEAN.with_target(0.9),))
        with pytest.raises(WitnessError):
            finitistic_witnesses(z2_mps, wrong, LatticeBox((0,), (8,)), 0.01)


class TestSchedule:
    def test_default_schedule_shape(self, z2_spec):
        schedule = default_schedule(z2_spec, 16, 0.05, copies=2)
        assert schedule.witness_level == 9
        assert list(schedule.levels) == [10, 11, 12, 13]
        assert all(b <= a for a, b in zip(schedule.deltas, schedule.deltas[1:]))
        assert all(d <= 0.05 / 5 for d in schedule.deltas)

    def test_tolerances_shrink_with_level(self, z2_spec):
        schedule = default_schedule(z2_spec, 16, 0.9, copies=2, max_levels=10)
        assert len(schedule.deltas) == 10
        assert schedule.deltas[0] == pytest.approx(0.9 / 5)
        assert all(b <= a for a, b in zip(schedule.deltas, schedule.deltas[1:]))
        assert schedule.deltas[-1] == pytest.approx(0.1)

    def test_random_source_needs_larger_witnesses(self, z2_spec):
        plain = default_schedule(z2_spec, 16, 0.05, copies=4)
        noisy = default_schedule(z2_spec, 16, 0.05, copies=4, random_source=True)
        assert noisy.witness_level >= 12 > plain.witness_level

    def test_window_too_small(self, z2_spec):
        with pytest.raises(ScheduleError):
            default_schedule(z2_spec, 0, 0.05, copies=2)

    def test_schedule_validation(self):
        with pytest.raises(ScheduleError):
            SynthesisSchedule(witness_level=5, levels=(5,), deltas=(0.1,))
        with pytest.raises(ScheduleError):
            SynthesisSchedule(witness_level=1, levels=(2, 3), deltas=(0.1,))


class TestSynthesis:
    def test_z2_rotation(self, z2_mps, z2_spec):
        result = synthesize_sequence(z2_spec, z2_mps, 2 ** 14, rng=SeededRng(1))
        assert result.passed
        assert result.final_error <= 0.05
        envelope = [err for _, err in result.envelope()]
        assert all(b <= a for a, b in zip(envelope, envelope[1:]))
        F = FolnerPlan().box(2 ** 14)
        assert cesaro_correlation(result.window, z2_spec.entries[0], F) == pytest.approx(0.5, abs=0.05)

    def test_deterministic(self, z2_mps, z2_spec):
        a = synthesize_sequence(z2_spec, z2_mps, 2 ** 12, rng=SeededRng(4))
        b = synthesize_sequence(z2_spec, z2_mps, 2 ** 12, rng=SeededRng(4))
        assert np.array_equal(a.window.values, b.window.values)

    def test_targets_filled_from_system(self, z2_mps):
        spec = CorrelationSpec((MEAN, _pair(2)))
        result = synthesize_sequence(spec, z2_mps, 2 ** 12)
        assert result.passed

    def test_horizon_must_fit_tiles(self, z2_mps, z2_spec):
        with pytest.raises(ScheduleError):
            synthesize_sequence(z2_spec, z2_mps, 2 ** 14 + 1)

    def test_random_source_needs_targets(self):
        spec = CorrelationSpec((MEAN,))
        with pytest.raises(ValueError):
            synthesize_sequence(spec, IidSpec(0.5).witness_source(), 2 ** 14)

    def test_block_errors_within_level_tolerance(self, z2_mps, z2_spec):
        result = synthesize_sequence(z2_spec, z2_mps, 2 ** 14, rng=SeededRng(1))
        schedule = result.schedule
        assert set(result.block_errors) == set(schedule.levels)
        for level, delta in zip(schedule.levels, schedule.deltas):
            assert delta <= 0.05 / 5
            assert result.block_errors[level] < delta

    def test_white_noise_blocks(self):
        spec = CorrelationSpec((
            CorrelationEntry.make([(0,)], StarPolynomial.identity(), target=0.0, label='mean'),
            CorrelationEntry.make([(1,), (0,)], StarPolynomial.correlation(), target=0.0, label='pair h=1'),
        ))
        result = synthesize_sequence(spec, white_noise_witness_source(), 2 ** 14, rng=SeededRng(13))
        assert result.window.domain == Domain.circle()
        assert np.allclose(np.abs(result.window.values), 1.0)
        assert result.passed
        assert all(err < delta for err, delta in zip(result.block_errors.values(), result.schedule.deltas))

    @pytest.mark.slow
    def test_z2_rotation_full_horizon(self, z2_mps, z2_spec):
        result = synthesize_sequence(z2_spec, z2_mps, 2 ** 16, rng=SeededRng(2))
        assert result.final_error <= 0.05
        tail = [err for _, err in result.envelope()[-4:]]
        assert all(b <= a for a, b in zip(tail, tail[1:]))


class TestInverseFurstenberg:
    def test_iid_pair_density(self):
        families = [[((0,), True), ((1,), True)]]
        result = inverse_furstenberg(IidSpec(0.5), families, 2 ** 15, rng=SeededRng(6))
        assert result.rows[0].kind == 'mean'
        assert result.rows[1].target == pytest.approx(0.25)
        assert abs(result.rows[1].density - 0.25) <= 0.02
        assert result.passed()

    def test_identity_unions(self):
        m = identity_mps([0.5, 0.5], [1, 0])
        result = union_ifc(m, [[(0,), (1,), (2,)], [(0,), (3,)]], 2 ** 12, rng=SeededRng(3))
        unions = [row for row in result.rows if row.kind == 'union']
        assert len(unions) == 2
        for row in unions:
            assert row.target == pytest.approx(0.5)
            assert abs(row.density - 0.5) <= 0.02

    def test_empty_set(self):
        m = identity_mps([1.0], [0])
        result = inverse_furstenberg(m, [[((0,), True), ((1,), True)]], 256)
        assert len(result.A) == 0
        assert result.max_deviation == 0.0

    def test_requires_indicator(self):
        m = rotation_mps(2, observable=[0.5, 0])
        with pytest.raises(DomainError):
            inverse_furstenberg(m, [[((0,), True)]], 256)

    def test_semigroup_rejects_negative_shift(self, z2_mps):
        with pytest.raises(ValueError):
            semigroup_ifc(z2_mps, [[((0,), True), ((-1,), True)]], 256)

    def test_semigroup_set_in_naturals(self):
        m = identity_mps([0.5, 0.5], [1, 0])
        result = semigroup_ifc(m, [[((0,), True)]], 2 ** 12, rng=SeededRng(8))
        assert result.A.array.min() >= 1
        assert abs(result.rows[0].density - 0.5) <= 0.02
        assert result.A.array.max() <= 2 ** 12

    def test_semigroup_whole_space(self):
        result = semigroup_ifc(identity_mps([1.0], [1]), [[((0,), True), ((3,), True)]], 64)
        assert len(result.A) == 64
        assert result.A.array.min() == 1
        assert result.A.array.max() == 64

    def test_z2_rotation_no_consecutive_pairs(self):
        result = inverse_furstenberg(rotation_mps(2), [[((0,), True), ((1,), True)]], 2 ** 12, rng=SeededRng(10))
        assert result.rows[0].density == pytest.approx(0.5, abs=0.02)
        assert result.rows[1].target == pytest.approx(0.0)
        assert result.rows[1].density == pytest.approx(0.0, abs=0.02)
