"""
Outer maximization over measurement axes.
"""
import math

import numpy as np
import pytest

from epr_steering.api.steering_errors import ParamError, SolverStall
from epr_steering.steering import settings_search
from epr_steering.steering.assemblage import X_AXIS, Y_AXIS, Z_AXIS, MeasurementSetting
from epr_steering.steering.config.steering_settings import SteeringSettings
from epr_steering.steering.criteria import RegionLabel, canonical_settings, classify_three_settings
from epr_steering.steering.qubit import apply_local_unitaries, rotation_unitary
from epr_steering.steering.states import FamilyParams, make_family_state
from epr_steering.steering.settings_search import (
    SearchConfig,
    local_refine,
    measuring_side,
    restart_rng,
    settings_radius,
    steering_radius,
    steering_verdict,
)

FAST = SearchConfig(restarts=3, max_iters=60)


class TestSearchConfig:

    def test_from_settings(self):
        cfg = SearchConfig.from_settings(SteeringSettings(seed=9, tol=1e-6), restarts=4, threads=None)
        assert cfg.restarts == 4
        assert cfg.seed == 9
        assert cfg.final_tol == 1e-6
        assert cfg.threads == 0

    @pytest.mark.parametrize("overrides", [{"restarts": 0}, {"max_iters": 0}, {"min_step": 0.5}])
    def test_invalid(self, overrides):
        with pytest.raises(ParamError):
            SearchConfig(**overrides).validate()


class TestHelpers:

    def test_measuring_side(self):
        assert measuring_side("ab") == "A"
        assert measuring_side("ba") == "B"
        with pytest.raises(ParamError):
            measuring_side("AB")

    def test_restart_streams_are_independent(self):
        a = restart_rng(0, 1).standard_normal(4)
        b = restart_rng(0, 2).standard_normal(4)
        assert not np.allclose(a, b)
        np.testing.assert_array_equal(a, restart_rng(0, 1).standard_normal(4))

    def test_nearly_parallel_axes_collide(self):
        tilted = MeasurementSetting.from_angles(math.radians(0.5), 0.0)
        assert settings_search._collides([Z_AXIS, tilted])
        assert settings_search._collides([Z_AXIS, MeasurementSetting((0.0, 0.0, -1.0))])
        assert not settings_search._collides([X_AXIS, Y_AXIS, Z_AXIS])

    def test_colliding_axes_score_minus_infinity(self, product):
        objective = settings_search._objective(product, "ab", SearchConfig())
        assert objective(np.array([0.0, 0.0, 0.001, 0.0])) == -math.inf

    def test_stalled_axes_are_skipped(self, bell, monkeypatch):
        def stall(rho, settings, direction, *args):
            raise SolverStall("stalled", t=1.0, settings=[s.to_list() for s in settings])

        monkeypatch.setattr(settings_search, "settings_radius", stall)
        objective = settings_search._objective(bell, "ab", SearchConfig())
        assert objective(np.array([math.pi / 2, 0.0, 0.0, 0.0])) == -math.inf

    def test_stall_reports_settings(self, bell, monkeypatch):
        def stall(*args, **kwargs):
            raise SolverStall("stalled", t=1.0)

        monkeypatch.setattr(settings_search, "min_max_radius", stall)
        with pytest.raises(SolverStall) as exc:
            settings_radius(bell, [X_AXIS, Z_AXIS], "ba")
        assert exc.value.context["direction"] == "ba"
        assert exc.value.context["settings"] == [X_AXIS.to_list(), Z_AXIS.to_list()]


class TestSteeringRadius:

    def test_product_state_is_setting_independent(self, product):
        ab = steering_radius(product, 2, "ab", FAST)
        ba = steering_radius(product, 2, "ba", FAST)
        assert ab.R == pytest.approx(0.5, abs=1e-9)
        assert ba.R == pytest.approx(0.3, abs=1e-9)
        assert not ab.steerable

    def test_ties_go_to_the_canonical_restart(self, product):
        report = steering_radius(product, 2, "ab", FAST)
        expected = np.array([s.vector for s in canonical_settings(2)])
        np.testing.assert_allclose([s.vector for s in report.best_settings], expected, atol=1e-12)
        assert report.traces[0].origin == "canonical"
        assert [t.index for t in report.traces] == [0, 1, 2]

    def test_deterministic(self, product):
        first = steering_radius(product, 3, "ba", FAST).to_dict()
        second = steering_radius(product, 3, "ba", FAST).to_dict()
        assert first == second

    def test_random_starts_follow_seed(self, product):
        a = steering_radius(product, 2, "ab", SearchConfig(restarts=2, max_iters=10, seed=1))
        b = steering_radius(product, 2, "ab", SearchConfig(restarts=2, max_iters=10, seed=2))
        assert a.traces[1].start != b.traces[1].start

    def test_maximally_mixed(self, maximally_mixed):
        assert steering_radius(maximally_mixed, 3, "ab", FAST).R == pytest.approx(0.0, abs=1e-9)

    @pytest.mark.parametrize("k", [0, 4])
    def test_setting_count_range(self, product, k):
        with pytest.raises(ParamError):
            steering_radius(product, k, "ab", FAST)

    def test_bad_direction(self, product):
        with pytest.raises(ParamError):
            steering_radius(product, 2, "both", FAST)

    def test_report_document(self, product):
        data = steering_radius(product, 2, "ab", FAST).to_dict()
        assert data["direction"] == "ab"
        assert data["steerable"] is False
        assert len(data["restarts"]) == 3
        assert "elapsed_s" not in data


@pytest.mark.slow
class TestSearchOnEntangledStates:

    @pytest.mark.parametrize("k", [2, 3])
    @pytest.mark.parametrize("direction", ["ab", "ba"])
    def test_bell_radius(self, bell, k, direction):
        report = steering_radius(bell, k, direction, SearchConfig(restarts=32, threads=0))
        assert report.R == pytest.approx(math.sqrt(k), abs=2e-3)

    @pytest.mark.parametrize("p", [0.6, 0.75])
    def test_one_way_points(self, p):
        theta = math.pi / 12
        verdict = steering_verdict(make_family_state(FamilyParams(p, theta)), 3, SearchConfig(restarts=32, threads=0))
        assert verdict.ab.R > 1 + 1e-3
        assert verdict.ba.R <= 1 + 1e-3
        assert verdict.label is RegionLabel.ONE_WAY_A_TO_B
        assert classify_three_settings(p, theta) is RegionLabel.ONE_WAY_A_TO_B

    def test_radius_does_not_depend_on_seed(self, one_way_state):
        radii = [steering_radius(one_way_state, 2, "ab", SearchConfig(restarts=8, seed=seed)).R for seed in (1, 2, 3)]
        assert max(radii) - min(radii) <= 2e-3

    def test_radius_is_invariant_under_local_unitaries(self, one_way_state):
        rotated = apply_local_unitaries(one_way_state, rotation_unitary((1, 1, 0), 0.7),
                                        rotation_unitary((0, 1, 2), 1.9))
        cfg = SearchConfig(restarts=8)
        for direction in ("ab", "ba"):
            expected = steering_radius(one_way_state, 2, direction, cfg).R
            assert steering_radius(rotated, 2, direction, cfg).R == pytest.approx(expected, abs=5e-3)

    def test_local_refine_recovers_bell_triple(self, bell):
        tilt = math.radians(10)
        start = [MeasurementSetting.from_angles(math.pi / 2 + tilt, tilt),
                 MeasurementSetting.from_angles(math.pi / 2 - tilt, math.pi / 2 + tilt),
                 MeasurementSetting.from_angles(tilt, -tilt)]
        refined, r = local_refine(bell, start, "ab", SearchConfig(max_iters=400))
        assert len(refined) == 3
        assert r == pytest.approx(math.sqrt(3), abs=2e-3)

    def test_search_never_loses_to_canonical(self, one_way_state):
        report = steering_radius(one_way_state, 2, "ba", SearchConfig(restarts=4))
        assert report.R >= report.canonical_r - 1e-9

    def test_local_refine_keeps_or_improves(self, one_way_state):
        start = [X_AXIS, Z_AXIS]
        start_r = settings_radius(one_way_state, start, "ab").r
        refined, r = local_refine(one_way_state, start, "ab", SearchConfig(max_iters=80))
        assert len(refined) == 2
        assert r >= start_r - 1e-9

    def test_one_way_verdict(self, one_way_state):
        verdict = steering_verdict(one_way_state, 3, SearchConfig(restarts=4, threads=2))
        assert verdict.ab.R > 1
        assert verdict.ba.R <= 1 + 1e-3
        assert verdict.label is RegionLabel.ONE_WAY_A_TO_B
