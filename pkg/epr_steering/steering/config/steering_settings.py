import dataclasses
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import yaml

from epr_steering.api.steering_errors import SettingsError

CONFIG_ENV = "EPR_STEERING_CONFIG"
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


@dataclass
class SteeringSettings:
    tol: float = 1e-5
    feas_tol: float = 1e-7
    max_iter: int = 50_000
    restarts: int = 32
    search_max_iters: int = 400
    search_tol: float = 1e-4
    seed: int = 0
    threads: int = 0
    mean_counts: float = 1e6
    resamples: int = 100
    log_level: str = "WARNING"
    run_log_path: Optional[str] = None

    def validate(self):
        if not 1e-8 <= self.tol <= 1e-2:
            raise SettingsError("tol must lie in [1e-8, 1e-2]", field="tol")

        if not 0 < self.feas_tol < 1e-2:
            raise SettingsError("feas_tol must lie in (0, 1e-2)", field="feas_tol")

        for name in ("max_iter", "restarts", "search_max_iters", "resamples"):
            if int(getattr(self, name)) < 1:
                raise SettingsError(f"{name} must be a positive integer", field=name)

        if self.resamples < 10:
            raise SettingsError("resamples must be at least 10", field="resamples")

        if self.threads < 0:
            raise SettingsError("threads must be >= 0 (0 = available parallelism)", field="threads")

        if self.mean_counts < 100:
            raise SettingsError("mean_counts must be at least 100", field="mean_counts")

        if str(self.log_level).upper() not in LOG_LEVELS:
            raise SettingsError(f"log_level must be one of {', '.join(LOG_LEVELS)}", field="log_level")
        self.log_level = str(self.log_level).upper()

        return self

    def merged(self, **overrides):
        """Copy with every non-None override applied (CLI flags win over the file)"""
        values = {k: v for k, v in overrides.items() if v is not None}
        return dataclasses.replace(self, **values).validate()

    def to_dict(self):
        return dataclasses.asdict(self)


def get_settings(path=None) -> SteeringSettings:
    """
    Load settings from a YAML file: the explicit path, else $EPR_STEERING_CONFIG,
    else built-in defaults.
    """
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return SteeringSettings().validate()

    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except OSError as e:
        raise SettingsError(f"cannot read settings file {path}: {e}", path=str(path))
    except yaml.YAMLError as e:
        raise SettingsError(f"{path}: invalid YAML: {e}", path=str(path))

    if not isinstance(data, dict):
        raise SettingsError(f"{path}: top level must be a mapping", path=str(path))

    known = {f.name for f in dataclasses.fields(SteeringSettings)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise SettingsError(f"{path}: unknown settings {', '.join(unknown)}", path=str(path))

    try:
        return SteeringSettings(**data).validate()
    except TypeError as e:
        raise SettingsError(f"{path}: {e}", path=str(path))
