"""
Run Log Module

Audit trail for steering computations. Every radius computation, scan,
simulation and failure becomes one typed record, emitted on the
`epr_steering.runs` logger and, when a run log path is configured, appended
to that file as one JSON line.
"""

import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from epr_steering import __version__

logger = logging.getLogger("epr_steering.runs")


class RunLogger:
    """
    Central run log for the CLI and library entry points
    """

    LOG_TYPES = {
        "RADIUS": "Steering Radius",
        "SCAN": "Grid Scan",
        "SIMULATE": "Counting Simulation",
        "ERROR": "Error Log",
    }

    def __init__(self, settings=None, path=None):
        self.path = Path(path) if path else None
        if self.path is None and settings is not None and settings.run_log_path:
            self.path = Path(settings.run_log_path)

    def _write(self, log_type, action, status="Success", **fields):
        entry = {
            "log_type": log_type,
            "action": action,
            "status": status,
            "version": __version__,
            "timestamp": datetime.now(timezone.utc).isoformat(),
            **fields,
        }
        try:
            logger.info("%s %s %s", self.LOG_TYPES[log_type], action, status,
                        extra={"run_record": entry})
            if self.path is not None:
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(entry, sort_keys=True, default=str) + "\n")
        except Exception as e:
            # Logging never breaks the computation
            logger.warning("run logging error: %s", e)
        return entry

    def log_radius(self, direction: str, k: int, radius: float,
                   settings: Optional[list] = None, evaluations: int = 0,
                   elapsed_s: float = 0.0):
        """
        Log a steering radius computation

        Args:
            direction: "ab" or "ba"
            k: number of measurement settings
            radius: the resulting radius
            settings: axes that achieved it
            evaluations: solver evaluations spent
            elapsed_s: wall time
        """
        return self._write("RADIUS", f"radius-{direction}", k=k, radius=radius,
                           settings=settings, evaluations=evaluations, elapsed_s=elapsed_s)

    def log_scan(self, action: str, points: int, output: Optional[str] = None,
                 elapsed_s: float = 0.0):
        return self._write("SCAN", action, points=points, output=output, elapsed_s=elapsed_s)

    def log_simulation(self, mean_counts: float, resamples: int, seed: int,
                       mean: float, std: float):
        return self._write("SIMULATE", "bootstrap", mean_counts=mean_counts,
                           resamples=resamples, seed=seed, mean=mean, std=std)

    def log_error(self, error_code: str, error_message: str,
                  action: str = None, context: dict = None):
        """
        Log a failed command

        Args:
            error_code: registry code of the error
            error_message: error description
            action: command that failed
            context: error context
        """
        return self._write("ERROR", action or "unknown", status="Failed",
                           error_code=error_code, error_message=error_message,
                           context=context or {})


def get_run_metrics(path) -> dict:
    """
    Summarize a run log file: record counts per type and action, failures by code.
    """
    metrics = {"total": 0, "by_type": {}, "errors_by_code": {}}
    path = Path(path)
    if not path.exists():
        return metrics

    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        try:
            entry = json.loads(line)
        except json.JSONDecodeError:
            continue
        metrics["total"] += 1
        by_action = metrics["by_type"].setdefault(entry.get("log_type", "unknown"), {})
        action = entry.get("action") or "unknown"
        by_action[action] = by_action.get(action, 0) + 1
        if entry.get("status") == "Failed":
            code = entry.get("error_code") or "unknown"
            metrics["errors_by_code"][code] = metrics["errors_by_code"].get(code, 0) + 1

    return metrics
