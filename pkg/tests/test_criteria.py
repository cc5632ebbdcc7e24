"""
Closed-form region labels, boundary curves and linear steering inequalities.
"""
import itertools
import math

import numpy as np
import pytest

from epr_steering.api.steering_errors import CapError, ParamError
from epr_steering.steering.assemblage import X_AXIS, Y_AXIS, Z_AXIS, MeasurementSetting
from epr_steering.steering.criteria import (
    SUPPORTED_N,
    RegionLabel,
    bowles_boundary,
    bowles_rhs,
    boundary_curves,
    canonical_settings,
    classify_by_radii,
    classify_infinite_settings,
    classify_three_settings,
    classify_two_settings,
    lhs_bound_C,
    linear_inequality,
    linear_S,
    steerable_a_to_b_infinite,
    unsteerable_b_to_a_infinite,
)
from epr_steering.steering.states import FamilyParams, make_family_state

PI = math.pi


class TestTwoSettings:

    def test_one_way_interior(self):
        assert classify_two_settings(0.8, PI / 12) is RegionLabel.ONE_WAY_A_TO_B

    def test_no_one_way_at_quarter_pi(self):
        labels = {classify_two_settings(p, PI / 4) for p in np.linspace(0, 1, 201)}
        assert RegionLabel.ONE_WAY_A_TO_B not in labels

    @pytest.mark.parametrize("theta", [0.0, 0.2, PI / 4])
    def test_half_is_unsteerable(self, theta):
        assert classify_two_settings(0.5, theta) is RegionLabel.UNSTEERABLE

    def test_lower_bound_is_strict(self):
        assert classify_two_settings(1 / math.sqrt(2), PI / 12) is RegionLabel.UNSTEERABLE

    def test_upper_bound_is_inclusive(self):
        upper = 1 / math.sqrt(1 + math.sin(PI / 6) ** 2)
        assert classify_two_settings(upper, PI / 12) is RegionLabel.ONE_WAY_A_TO_B
        assert classify_two_settings(upper + 1e-9, PI / 12) is RegionLabel.TWO_WAY

    def test_product_edge_is_unsteerable(self):
        assert classify_two_settings(0.9, 0.0) is RegionLabel.UNSTEERABLE

    def test_invalid_parameters(self):
        with pytest.raises(ParamError):
            classify_two_settings(1.2, 0.1)


class TestThreeSettings:

    @pytest.mark.parametrize("p, label", [
        (0.6, RegionLabel.ONE_WAY_A_TO_B),
        (0.55, RegionLabel.UNSTEERABLE),
        (0.9, RegionLabel.TWO_WAY),
    ])
    def test_examples(self, p, label):
        assert classify_three_settings(p, PI / 12) is label

    def test_no_one_way_at_quarter_pi(self):
        labels = {classify_three_settings(p, PI / 4) for p in np.linspace(0, 1, 201)}
        assert RegionLabel.ONE_WAY_A_TO_B not in labels

    def test_region_nesting(self):
        for p, theta in itertools.product(np.linspace(0, 1, 41), np.linspace(0, PI / 4, 21)):
            if classify_two_settings(p, theta) is RegionLabel.ONE_WAY_A_TO_B:
                assert classify_three_settings(p, theta) in (RegionLabel.ONE_WAY_A_TO_B, RegionLabel.TWO_WAY)


class TestInfiniteSettings:

    def test_bowles_rhs(self):
        assert bowles_rhs(0.6) == pytest.approx(0.2 / (1.4 * 0.216))

    @pytest.mark.parametrize("theta", [0.0, 0.3, PI / 4])
    def test_half_is_b_unsteerable(self, theta):
        assert unsteerable_b_to_a_infinite(0.5, theta)

    def test_examples(self):
        assert unsteerable_b_to_a_infinite(0.6, 0.0)
        assert not unsteerable_b_to_a_infinite(0.6, PI / 4)
        assert unsteerable_b_to_a_infinite(0.0, 0.3)

    def test_alice_steers_above_half(self):
        assert steerable_a_to_b_infinite(0.51)
        assert not steerable_a_to_b_infinite(0.5)
        assert steerable_a_to_b_infinite(1.0)

    @pytest.mark.parametrize("p, theta, label", [
        (0.5, 0.3, RegionLabel.UNSTEERABLE),
        (0.6, PI / 12, RegionLabel.ONE_WAY_A_TO_B),
        (1.0, PI / 4, RegionLabel.TWO_WAY),
        (0.9, 0.0, RegionLabel.UNSTEERABLE),
    ])
    def test_labels(self, p, theta, label):
        assert classify_infinite_settings(p, theta) is label


class TestClassifyByRadii:

    @pytest.mark.parametrize("r_ab, r_ba, label", [
        (1.2, 1.1, RegionLabel.TWO_WAY),
        (1.2, 0.9, RegionLabel.ONE_WAY_A_TO_B),
        (0.9, 1.2, RegionLabel.ONE_WAY_B_TO_A),
        (1.0, 0.4, RegionLabel.UNSTEERABLE),
    ])
    def test_labels(self, r_ab, r_ba, label):
        assert classify_by_radii(r_ab, r_ba) is label


class TestBoundaryCurves:

    def test_shapes_and_constants(self):
        thetas = np.linspace(0, PI / 4, 11)
        curves = boundary_curves(thetas)
        np.testing.assert_allclose(curves["two_lower"], 1 / math.sqrt(2))
        np.testing.assert_allclose(curves["three_lower"], 1 / math.sqrt(3))
        assert curves["two_upper"][-1] == pytest.approx(1 / math.sqrt(2))
        assert curves["three_upper"][-1] == pytest.approx(1 / math.sqrt(3))

    def test_infinite_curve_solves_the_inequality(self):
        for theta in np.linspace(0.05, 0.75, 8):
            p = bowles_boundary(theta)
            assert bowles_rhs(p) == pytest.approx(math.cos(2 * theta) ** 2, abs=1e-10)

    def test_infinite_curve_endpoints(self):
        assert bowles_boundary(0.0) == 1.0
        assert bowles_boundary(PI / 4) == pytest.approx(0.5, abs=1e-9)


class TestLinearInequality:

    def test_bell_perfect_correlations(self, bell):
        assert linear_S(bell, [X_AXIS, Y_AXIS, Z_AXIS]) == pytest.approx(1.0, abs=1e-12)

    def test_family_closed_form(self):
        p, theta = 0.7, 0.3
        rho = make_family_state(FamilyParams(p, theta))
        expected = p * (1 + 2 * math.sin(2 * theta)) / 3
        assert linear_S(rho, [X_AXIS, Y_AXIS, Z_AXIS]) == pytest.approx(expected, abs=1e-12)

    def test_maximally_mixed_is_zero(self, maximally_mixed):
        assert linear_S(maximally_mixed, canonical_settings(6)) == pytest.approx(0.0, abs=1e-12)

    def test_monotone_in_p(self):
        values = [linear_S(make_family_state(FamilyParams(p, 0.4)), canonical_settings(4))
                  for p in np.linspace(0, 1, 11)]
        assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize("settings, expected", [
        ([X_AXIS, Z_AXIS], math.sqrt(2) / 2),
        ([X_AXIS, Y_AXIS, Z_AXIS], math.sqrt(3) / 3),
        ([Z_AXIS], 1.0),
    ])
    def test_lhs_bound(self, settings, expected):
        assert lhs_bound_C(settings) == pytest.approx(expected, abs=1e-12)

    def test_lhs_bound_cap(self):
        rng = np.random.default_rng(0)
        settings = [MeasurementSetting.along(rng.standard_normal(3)) for _ in range(17)]
        with pytest.raises(CapError):
            lhs_bound_C(settings)

    def test_bell_violation(self, bell):
        result = linear_inequality(bell, 3)
        assert result.violation == pytest.approx(1 - 1 / math.sqrt(3), abs=1e-12)

    def test_bowles_states_never_violate(self):
        for theta in np.linspace(0.05, 0.75, 10):
            rho = make_family_state(FamilyParams(0.95 * bowles_boundary(theta), theta))
            for n in SUPPORTED_N:
                assert linear_inequality(rho, n).violation <= 1e-9

    def test_one_way_state_rows(self, one_way_state):
        result = linear_inequality(one_way_state, 3)
        assert result.S_n == pytest.approx(0.4, abs=1e-12)
        assert result.violation < 0

    def test_direction_checked(self, bell):
        with pytest.raises(ParamError):
            linear_S(bell, [Z_AXIS], direction="up")


class TestCanonicalSettings:

    def test_orthogonal_triad(self):
        vectors = np.array([s.vector for s in canonical_settings(3)])
        np.testing.assert_allclose(vectors @ vectors.T, np.eye(3), atol=1e-12)

    def test_orthogonal_pair(self):
        a, b = canonical_settings(2)
        assert a.vector @ b.vector == pytest.approx(0.0, abs=1e-12)

    def test_cube_diagonals(self):
        vectors = np.array([s.vector for s in canonical_settings(4)])
        overlaps = np.abs(vectors @ vectors.T)[~np.eye(4, dtype=bool)]
        np.testing.assert_allclose(overlaps, 1 / 3, atol=1e-12)

    @pytest.mark.parametrize("n", SUPPORTED_N)
    def test_unit_and_distinct(self, n):
        vectors = np.array([s.vector for s in canonical_settings(n)])
        assert len(vectors) == n
        np.testing.assert_allclose(np.linalg.norm(vectors, axis=1), 1, atol=1e-12)
        overlaps = np.abs(vectors @ vectors.T)[~np.eye(n, dtype=bool)]
        assert overlaps.max() < 0.99

    def test_icosahedron_axes_are_equiangular(self):
        vectors = np.array([s.vector for s in canonical_settings(6)])
        overlaps = np.abs(vectors @ vectors.T)[~np.eye(6, dtype=bool)]
        np.testing.assert_allclose(overlaps, 1 / math.sqrt(5), atol=1e-12)

    def test_unsupported(self):
        with pytest.raises(ParamError):
            canonical_settings(5)
