"""
State family construction and state-file persistence.
"""
import json
import math

import numpy as np
import pytest

from epr_steering.api.steering_errors import ParamError, ParseError, ValidationError
from epr_steering.steering.assemblage import correlation_data
from epr_steering.steering.states import (
    THETA_MAX,
    FamilyParams,
    load_state,
    make_family_state,
    make_werner,
    random_two_qubit_state,
    save_state,
)


class TestFamilyState:

    def test_bell_projector(self):
        rho = make_family_state(FamilyParams(1.0, math.pi / 4))
        expected = np.zeros((4, 4))
        expected[np.ix_([0, 3], [0, 3])] = 0.5
        np.testing.assert_allclose(rho.matrix, expected, atol=1e-12)

    def test_zero_mixing_is_product(self):
        t = 0.4
        rho = make_family_state(FamilyParams(0.0, t))
        expected = np.kron(np.eye(2) / 2, np.diag([math.cos(t) ** 2, math.sin(t) ** 2]))
        np.testing.assert_allclose(rho.matrix, expected, atol=1e-12)

    def test_correlation_matrix(self, one_way_state):
        T = correlation_data(one_way_state).T
        np.testing.assert_allclose(T, np.diag([0.3, -0.3, 0.6]), atol=1e-12)

    def test_local_bloch_vectors(self, one_way_state):
        data = correlation_data(one_way_state)
        c = math.cos(math.pi / 6)
        np.testing.assert_allclose(data.a_A, [0, 0, 0.6 * c], atol=1e-12)
        np.testing.assert_allclose(data.b_B, [0, 0, c], atol=1e-12)

    def test_metadata_kept(self, one_way_state):
        assert one_way_state.meta == {"p": 0.6, "theta": pytest.approx(math.pi / 12)}


class TestWerner:

    def test_zero_is_maximally_mixed(self):
        np.testing.assert_allclose(make_werner(0.0).matrix, np.eye(4) / 4, atol=1e-12)

    def test_matches_family_at_quarter_pi(self):
        for p in (0.0, 0.3, 0.7, 1.0):
            np.testing.assert_allclose(make_werner(p).matrix,
                                       make_family_state(FamilyParams(p, math.pi / 4)).matrix, atol=1e-12)


class TestFamilyParams:

    @pytest.mark.parametrize("p, theta", [(1.1, 0.2), (-0.1, 0.2), (0.5, 0.9), (0.5, -0.01), (math.nan, 0.1)])
    def test_out_of_range_rejected(self, p, theta):
        with pytest.raises(ParamError):
            FamilyParams(p, theta)

    def test_rounded_quarter_pi_is_clamped(self):
        assert FamilyParams(1.0, 0.7854).theta == THETA_MAX


class TestPersistence:

    def test_save_and_load(self, tmp_path, one_way_state):
        path = save_state(one_way_state, tmp_path / "state.json")
        loaded = load_state(path)
        np.testing.assert_allclose(loaded.matrix, one_way_state.matrix, atol=1e-15)
        assert loaded.meta["p"] == 0.6

    def test_complex_entries_survive(self, tmp_path):
        rho = random_two_qubit_state(np.random.default_rng(3))
        loaded = load_state(save_state(rho, tmp_path / "random.json"))
        np.testing.assert_allclose(loaded.matrix, rho.matrix, atol=1e-15)

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"dim": [4, 4], "matrix": [', encoding="utf-8")
        with pytest.raises(ParseError) as exc:
            load_state(path)
        assert exc.value.context["line"] == 1

    def test_wrong_dim(self, tmp_path):
        path = tmp_path / "dim.json"
        path.write_text(json.dumps({"dim": [2, 2], "matrix": []}), encoding="utf-8")
        with pytest.raises(ParseError):
            load_state(path)

    def test_bad_entry_names_field(self, tmp_path):
        rows = [[[0.25, 0.0]] * 4 for _ in range(4)]
        rows[2][1] = "x"
        path = tmp_path / "entry.json"
        path.write_text(json.dumps({"dim": [4, 4], "matrix": rows}), encoding="utf-8")
        with pytest.raises(ParseError) as exc:
            load_state(path)
        assert exc.value.context["field"] == "matrix[2][1]"

    def test_not_a_density_matrix(self, tmp_path):
        rows = [[[1.0 if i == j else 0.0, 0.0] for j in range(4)] for i in range(4)]
        path = tmp_path / "trace4.json"
        path.write_text(json.dumps({"dim": [4, 4], "matrix": rows}), encoding="utf-8")
        with pytest.raises(ValidationError):
            load_state(path)
