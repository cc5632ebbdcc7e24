"""
YAML settings loading and validation.
"""
import pytest

from epr_steering.api.steering_errors import SettingsError
from epr_steering.steering.config.steering_settings import CONFIG_ENV, SteeringSettings, get_settings


class TestGetSettings:

    def test_defaults(self, monkeypatch):
        monkeypatch.delenv(CONFIG_ENV, raising=False)
        settings = get_settings()
        assert settings.tol == 1e-5
        assert settings.restarts == 32
        assert settings.run_log_path is None

    def test_file_values(self, tmp_path):
        path = tmp_path / "settings.yaml"
        path.write_text("tol: 1.0e-6\nrestarts: 8\nlog_level: info\n", encoding="utf-8")
        settings = get_settings(path)
        assert settings.tol == 1e-6
        assert settings.restarts == 8
        assert settings.log_level == "INFO"

    def test_environment_variable(self, tmp_path, monkeypatch):
        path = tmp_path / "env.yaml"
        path.write_text("seed: 42\n", encoding="utf-8")
        monkeypatch.setenv(CONFIG_ENV, str(path))
        assert get_settings().seed == 42

    def test_empty_file_is_defaults(self, tmp_path):
        path = tmp_path / "empty.yaml"
        path.write_text("", encoding="utf-8")
        assert get_settings(path) == SteeringSettings()

    @pytest.mark.parametrize("text", ["[1, 2]\n", "tol: [\n", "unknown_key: 3\n", "tol: 0.5\n"])
    def test_rejected(self, tmp_path, text):
        path = tmp_path / "bad.yaml"
        path.write_text(text, encoding="utf-8")
        with pytest.raises(SettingsError):
            get_settings(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(SettingsError) as exc:
            get_settings(tmp_path / "absent.yaml")
        assert exc.value.context["path"].endswith("absent.yaml")


class TestSteeringSettings:

    def test_merged_ignores_none(self):
        merged = SteeringSettings().merged(seed=7, tol=None)
        assert merged.seed == 7
        assert merged.tol == 1e-5

    @pytest.mark.parametrize("field, value", [
        ("tol", 1e-9), ("resamples", 5), ("threads", -1), ("mean_counts", 10), ("log_level", "LOUD"),
    ])
    def test_validation_names_field(self, field, value):
        with pytest.raises(SettingsError) as exc:
            SteeringSettings(**{field: value}).validate()
        assert exc.value.context["field"] == field
