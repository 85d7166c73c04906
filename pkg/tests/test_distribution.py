import numpy as np
import pytest
from hypothesis import given, strategies as st

from riskmnl.distribution import (
    InvalidAssortment,
    InvalidDistribution,
    InvalidParameter,
    RewardDistribution,
    cdf_at,
    from_assortment,
    mean,
    mixture,
    moment,
    variance,
)

from conftest import distributions, mnl_problems


def test_empty_assortment_is_point_mass_at_zero():
    F = from_assortment((), [0.3, 0.9], [0.5, 0.5])
    assert F.atoms == [(0.0, 1.0)]


def test_two_product_assortment_atoms():
    F = from_assortment({1, 2}, [0.5, 0.5], [0.3, 0.9])
    assert F.allclose(RewardDistribution.from_atoms([(0, 0.5), (0.3, 0.25), (0.9, 0.25)]))


def test_unit_preference_splits_evenly():
    assert from_assortment({1}, [1.0], [1.0]).atoms == [(0.0, 0.5), (1.0, 0.5)]


def test_equal_profits_are_merged():
    F = from_assortment({1, 2}, [0.5, 0.5], [0.4, 0.4])
    assert F.atoms == [(0.0, 0.5), (0.4, 0.5)]


@pytest.mark.parametrize("S", [{0}, {3}, {-1, 1}])
def test_out_of_range_product_rejected(S):
    with pytest.raises(InvalidAssortment):
        from_assortment(S, [0.5, 0.5], [0.3, 0.9])


def test_mean_examples():
    assert mean(RewardDistribution.point_mass(0.0)) == 0.0
    assert mean(from_assortment({1, 2}, [0.5, 0.5], [0.3, 0.9])) == pytest.approx(0.3, abs=1e-15)
    assert mean(RewardDistribution.from_atoms([(0, 0.5), (1, 0.5)])) == 0.5


def test_moment_examples():
    F = RewardDistribution.from_atoms([(0, 0.5), (1, 0.5)])
    assert moment(F, 1) == 0.5
    assert moment(F, 2) == 0.5
    assert moment(RewardDistribution.point_mass(0.5), 3) == 0.125


@pytest.mark.parametrize("n", [0, -1, 1.5])
def test_moment_order_validated(n):
    with pytest.raises(InvalidParameter):
        moment(RewardDistribution.point_mass(0.5), n)


def test_variance_examples(three_atoms):
    assert variance(RewardDistribution.point_mass(0.7)) == 0.0
    assert variance(RewardDistribution.from_atoms([(0, 0.5), (1, 0.5)])) == 0.25
    assert variance(three_atoms) == pytest.approx(0.1456, abs=1e-15)


def test_cdf_examples():
    F = RewardDistribution.from_atoms([(0, 0.5), (0.4, 0.5)])
    assert cdf_at(F, 1.0) == 1.0
    assert cdf_at(F, 0.2) == 0.5
    assert cdf_at(F, 0.4) == 1.0


def test_mixture_examples():
    F1, F2 = RewardDistribution.point_mass(0.0), RewardDistribution.point_mass(1.0)
    assert mixture(1.0, F1, F2) == F1
    assert mixture(0.0, F1, F2) == F2
    assert mixture(0.5, F1, F2).atoms == [(0.0, 0.5), (1.0, 0.5)]
    with pytest.raises(InvalidParameter):
        mixture(1.5, F1, F2)


@pytest.mark.parametrize("atoms", [
    [(0.2, 0.5), (0.1, 0.5)],     # not increasing
    [(0.2, 0.5), (0.2, 0.5)],     # repeated payoff
    [(1.2, 1.0)],
    [(0.5, 0.9)],
    [(0.0, -0.1), (1.0, 1.1)],
])
def test_constructor_rejects_invalid(atoms):
    with pytest.raises(InvalidDistribution):
        RewardDistribution(np.array([a[0] for a in atoms]), np.array([a[1] for a in atoms]))


def test_empirical_rejects_empty():
    with pytest.raises(InvalidDistribution):
        RewardDistribution.empirical([])


def test_arrays_are_read_only():
    F = RewardDistribution.point_mass(0.5)
    with pytest.raises(ValueError):
        F.masses[0] = 0.0


@given(mnl_problems(), st.data())
def test_assortment_masses_sum_to_one(problem, data):
    v, r = problem
    S = data.draw(st.sets(st.integers(1, v.size)))
    F = from_assortment(S, v, r)
    assert abs(F.masses.sum() - 1.0) <= 1e-12
    assert np.all(np.diff(F.payoffs) > 0)


@given(distributions(), st.lists(st.floats(0, 1), min_size=1, max_size=5))
def test_merging_preserves_moments_and_cdf(F, probes):
    # split every atom in two and rebuild through the merging constructor
    halves = [(x, m / 2) for x, m in F.atoms for _ in range(2)]
    G = RewardDistribution.from_atoms(halves)
    assert G.allclose(F, atol=1e-15)
    for n in (1, 2, 3):
        assert moment(G, n) == pytest.approx(moment(F, n), abs=1e-14)
    for x in probes:
        assert cdf_at(G, x) == pytest.approx(cdf_at(F, x), abs=1e-14)


@given(distributions(), st.floats(0, 1))
def test_self_mixture_is_identity(F, lam):
    assert mixture(lam, F, F).allclose(F, atol=1e-12)


@given(distributions())
def test_variance_bounded(F):
    assert 0.0 <= variance(F) <= 0.25 + 1e-15


def test_merged_mass_rounding_above_one_is_clamped():
    # these two masses sum to 1.0000000000000002 in floating point
    a = 0.7
    b = 1.0 - a + 2e-16
    assert a + b > 1.0
    F = RewardDistribution.from_atoms([(0.0, a), (0.0, b)])
    assert F.atoms == [(0.0, 1.0)]
    with pytest.raises(InvalidDistribution):
        RewardDistribution.from_atoms([(0.0, 1.0 + 1e-9)])
