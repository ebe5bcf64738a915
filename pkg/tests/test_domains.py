import numpy as np
import pytest

from core.domains import Domain, DomainTag
from core.errors import DomainError


class TestFiniteDomains:
    def test_canonical_finite_sets(self):
        assert Domain.finite([1, 0, 1]) == Domain.binary()
        assert Domain.finite([-1, 1]) == Domain.sign()
        assert Domain.finite([1, 1j]).tag == DomainTag.FINITE

    def test_finite_requires_points(self):
        with pytest.raises(ValueError):
            Domain(DomainTag.FINITE)

    def test_default_fill(self):
        assert Domain.binary().default_fill() == 0
        assert Domain.sign().default_fill() == 1
        assert Domain.circle().default_fill() == 1


class TestContains:
    def test_disc_and_circle(self):
        z = np.array([0.5, 1j, 1.2])
        assert Domain.disc().contains(z).tolist() == [True, True, False]
        assert Domain.circle().contains(z).tolist() == [False, True, False]

    def test_triangle_hull(self):
        tri = Domain.hull([0, 1, 1j])
        assert tri.contains(np.array([(1 + 1j) / 3]))[0]
        assert not tri.contains(np.array([1 + 1j]))[0]

    def test_collinear_hull(self):
        seg = Domain.hull([-1, 1])
        assert seg.contains(np.array([0.3, 0.3 + 0.1j])).tolist() == [True, False]

    def test_validate_raises(self):
        with pytest.raises(DomainError):
            Domain.binary().validate(np.array([0, 1, 0.5]))


class TestInfer:
    @pytest.mark.parametrize("values,tag", [
        ([0, 1, 1], DomainTag.BINARY),
        ([-1, 1], DomainTag.SIGN),
        ([0.5, 0.25], DomainTag.UNIT_INTERVAL),
        ([-0.5, 0.5], DomainTag.SYMMETRIC_INTERVAL),
        ([np.exp(1j), -1j], DomainTag.CIRCLE),
        ([0.5j], DomainTag.DISC),
    ])
    def test_smallest_domain(self, values, tag):
        assert Domain.infer(np.array(values, dtype=complex)).tag == tag

    def test_outside_disc(self):
        with pytest.raises(DomainError):
            Domain.infer(np.array([2.0]))


def test_json_roundtrip_keeps_vertices():
    d = Domain.finite([1, 1j, -1])
    assert Domain.from_json(d.to_json()) == d


def test_sample_grid_on_circle():
    grid = Domain.circle().sample_grid(8)
    assert len(grid) == 8
    assert np.allclose(np.abs(grid), 1)
