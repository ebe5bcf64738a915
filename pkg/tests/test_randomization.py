import math

import numpy as np
import pytest

from core.averaging import (
    CorrelationEntry, SequenceWindow, StarPolynomial, WitnessBundle, cesaro_correlation, window_average
)
from core.domains import Domain
from core.errors import ConvergenceError, DomainError, GeometryError, WitnessError
from core.lattice_group import LatticeBox
from core.randomization import (
    SeededRng, bernoulli_witness_source, convex_representation, convexify_window,
    lift_witnesses_to_circle, mc_envelope, sample_biased_circle, white_noise_envelope,
    white_noise_window, white_noise_witness_source
)


class TestSeededRng:
    def test_reproducible(self):
        a = SeededRng(7).generator().random(5)
        b = SeededRng(7).generator().random(5)
        assert np.array_equal(a, b)

    def test_child_streams_differ(self):
        base = SeededRng(7)
        assert not np.array_equal(base.child(0).generator().random(5), base.child(1).generator().random(5))
        assert not np.array_equal(base.child(-1).generator().random(5), base.child(1).generator().random(5))

    def test_json(self):
        assert SeededRng(3, (1, 2)).to_json() == {'seed': 3, 'stream': [1, 2], 'algorithm': 'PCG64'}

    def test_site_uniforms_depend_only_on_site(self):
        rng = SeededRng(7, (3,))
        points = np.array([[-2], [-1], [0], [1], [2]])
        u = rng.site_uniforms(points)
        assert np.all((u >= 0) & (u < 1))
        assert len(set(u.tolist())) == 5
        assert np.array_equal(rng.site_uniforms(points[::-1]), u[::-1])
        assert rng.site_uniforms(points[2:3])[0] == u[2]
        assert not np.array_equal(rng.site_uniforms(points, draw=1), u)
        assert not np.array_equal(SeededRng(7, (4,)).site_uniforms(points), u)

    def test_site_uniforms_are_uniform(self):
        u = SeededRng(1).site_uniforms(LatticeBox((-50_000,), (100_000,)).points())
        assert abs(u.mean() - 0.5) < 0.005
        counts = np.histogram(u, bins=10, range=(0, 1))[0]
        assert counts.min() > 9_500 and counts.max() < 10_500

    def test_site_uniforms_shape(self):
        with pytest.raises(ValueError):
            SeededRng(1).site_uniforms(np.arange(4))


class TestBiasedCircle:
    def test_moments(self):
        sample = sample_biased_circle(1.0, SeededRng(2024), size=1_000_000)
        z = sample.values
        assert len(z) == 1_000_000
        assert np.allclose(np.abs(z), 1.0)
        assert abs(z.mean() - 0.5) < 5e-3
        assert abs((z ** 2).mean()) < 5e-3
        assert 0.4 < sample.acceptance <= 0.6

    def test_complex_target(self):
        w = 0.6j
        z = sample_biased_circle(w, SeededRng(5), size=400_000).values
        assert abs(z.mean() - w / 2) < 1e-2

    def test_outside_disc(self):
        with pytest.raises(DomainError):
            sample_biased_circle(1.5, SeededRng(0))


class TestConvexify:
    def test_binary_mean_preserved(self):
        box = LatticeBox((0,), (100_000,))
        w = SequenceWindow.constant(box, 0.3, Domain.unit_interval())
        result = convexify_window(w, (0, 1), SeededRng(11))
        assert result.method == 'interval'
        assert result.window.domain == Domain.binary()
        assert set(np.unique(result.window.values.real)) <= {0.0, 1.0}
        assert abs(window_average(result.window, box).real - 0.3) < 0.01

    def test_triangle_uses_simplex(self):
        box = LatticeBox((0,), (50_000,))
        D = (1, 1j, -1 - 1j)
        w = SequenceWindow.constant(box, 0.1 + 0.1j, Domain.disc())
        result = convexify_window(w, D, SeededRng(3))
        assert result.method == 'simplex'
        assert result.representations == 1
        assert result.max_residual < 1e-9
        assert abs(window_average(result.window, box) - (0.1 + 0.1j)) < 0.03

    def test_outside_hull(self):
        w = SequenceWindow.constant(LatticeBox((0,), (4,)), -0.5, Domain.symmetric_interval())
        with pytest.raises(GeometryError):
            convexify_window(w, (0, 1), SeededRng(0))

    def test_representation_weights(self):
        lam = convex_representation(0.25 + 0j, np.array([0, 1, 1j], dtype=complex))
        assert lam.sum() == pytest.approx(1.0)
        assert lam @ np.array([0, 1, 1j]) == pytest.approx(0.25)

    def test_draws_follow_sites(self):
        w = SequenceWindow.constant(LatticeBox((0,), (40,)), 0.5, Domain.unit_interval())
        part = SequenceWindow.constant(LatticeBox((10,), (20,)), 0.5, Domain.unit_interval())
        full = convexify_window(w, (0, 1), SeededRng(4)).window
        sub = convexify_window(part, (0, 1), SeededRng(4)).window
        assert np.array_equal(full.values[10:30], sub.values)


class TestLift:
    def test_zero_witness_lifts(self):
        box = LatticeBox((0,), (4100,))
        region = LatticeBox((0,), (4096,))
        bundle = WitnessBundle((SequenceWindow.constant(box, 0, Domain.disc()),), region)
        result = lift_witnesses_to_circle(bundle, 2, 0.05, SeededRng(9), shifts=[(1,), (2,)])
        assert result.passed()
        assert abs(result.mean_statistic) <= 0.05
        assert result.bundle.domain == Domain.circle()

    def test_copy_limit(self):
        box = LatticeBox((0,), (64,))
        bundle = WitnessBundle((SequenceWindow.constant(box, 0, Domain.disc()),), LatticeBox((0,), (60,)))
        with pytest.raises(ConvergenceError):
            lift_witnesses_to_circle(bundle, 1, 1e-6, SeededRng(1), shifts=[(1,)], max_copies=2)

    def test_constant_witness_mean_halved(self):
        box = LatticeBox((0,), (4096,))
        bundle = WitnessBundle((SequenceWindow.constant(box, 0.6, Domain.disc()),), box)
        result = lift_witnesses_to_circle(bundle, 3, 0.05, SeededRng(12), shifts=[])
        assert result.mean_target == pytest.approx(0.3)
        assert 0.25 <= result.mean_statistic.real <= 0.35
        assert result.correlations == {}

    @pytest.mark.parametrize("values", [
        lambda n: np.full(n, 0.6),
        lambda n: 0.9 * (-1.0) ** np.arange(n),
    ])
    def test_correlated_witness_rejected(self, values):
        box = LatticeBox((0,), (1025,))
        window = SequenceWindow(box, values(1025).astype(complex), Domain.disc())
        bundle = WitnessBundle((window,), LatticeBox((0,), (1024,)))
        with pytest.raises(WitnessError):
            lift_witnesses_to_circle(bundle, 2, 0.05, SeededRng(3), shifts=[(1,)])

    def test_power_two_statistic_with_many_samples(self):
        n = 100_000
        box = LatticeBox((0,), (n + 2,))
        noise = white_noise_window(box, SeededRng(21))
        window = SequenceWindow(box, 0.6 * noise.values, Domain.disc())
        bundle = WitnessBundle((window,), LatticeBox((0,), (n,)))
        result = lift_witnesses_to_circle(bundle, 2, 0.05, SeededRng(22), shifts=[(1,), (2,)])
        assert result.samples >= 100_000
        assert set(result.correlations) == {'h=[1],l=1', 'h=[1],l=2', 'h=[2],l=1', 'h=[2],l=2'}
        assert result.correlations['h=[1],l=2'] <= 0.05
        assert result.correlations['h=[2],l=2'] <= 0.05


class TestWhiteNoise:
    def test_correlations_within_budget(self):
        n = 100_000
        w = white_noise_window(LatticeBox((0,), (n + 5,)), SeededRng(42))
        F = LatticeBox((0,), (n,))
        assert white_noise_envelope(n) == pytest.approx(3 / math.sqrt(n))
        for h in range(1, 6):
            for l in (1, 2):
                e = CorrelationEntry.make([(0,), (h,)], StarPolynomial.correlation(l))
                assert abs(cesaro_correlation(w, e, F)) <= 0.02

    def test_sites_agree_across_regions(self):
        rng = SeededRng(5)
        wide = white_noise_window(LatticeBox((0,), (20,)), rng)
        narrow = white_noise_window(LatticeBox((5,), (15,)), rng)
        assert wide.values[5] == narrow.values[0]
        assert np.array_equal(wide.values[5:], narrow.values)

    def test_sites_agree_in_2d(self):
        rng = SeededRng(6, (1,))
        a = white_noise_window(LatticeBox((-3, -3), (8, 8)), rng)
        b = white_noise_window(LatticeBox((0, -1), (6, 4)), rng)
        assert np.array_equal(a.values[3:8, 2:6], b.values[:5, :])

    def test_mc_envelope(self):
        e = CorrelationEntry.make([(0,), (1,)], StarPolynomial.product(2))
        assert mc_envelope(e, 900) == pytest.approx(3 * math.sqrt(3 / 900))
        with pytest.raises(ValueError):
            mc_envelope(e, 0)


class TestWitnessSources:
    def test_bernoulli_source(self):
        region = LatticeBox((0,), (4096,))
        extent = LatticeBox((0,), (4097,))
        bundle = bernoulli_witness_source(0.25, copies=3)(region, extent, SeededRng(8))
        assert bundle.K == 3
        assert bundle.domain == Domain.binary()
        mean = CorrelationEntry.make([(0,)], StarPolynomial.identity())
        assert abs(bundle.statistic(mean) - 0.25) < 0.03

    def test_white_noise_source(self):
        region = LatticeBox((0,), (16,))
        bundle = white_noise_witness_source(copies=2)(region, region, SeededRng(8))
        assert bundle.K == 2
        assert bundle.domain == Domain.circle()
