import math
from dataclasses import dataclass

import numpy as np

from epr_steering.api.steering_errors import ParamError
from epr_steering.api.tasks import run_pool
from epr_steering.steering.criteria import (
    boundary_curves,
    canonical_settings,
    classify_by_radii,
    classify_infinite_settings,
    classify_three_settings,
    classify_two_settings,
    unsteerable_b_to_a_infinite,
)
from epr_steering.steering.lhsm import DEFAULT_TOL, SolverOptions
from epr_steering.steering.settings_search import settings_radius
from epr_steering.steering.states import THETA_MAX, FamilyParams, make_family_state

SCENARIOS = ("2", "3", "infinite")


@dataclass
class ScanSpec:
    p_min: float = 0.0
    p_max: float = 1.0
    p_steps: int = 50
    theta_min: float = 0.0
    theta_max: float = THETA_MAX
    theta_steps: int = 50
    scenario: str = "3"
    with_solver: bool = False
    k: int = 3
    tol: float = 1e-4
    threads: int = 1
    solver: SolverOptions = None

    def validate(self):
        if self.p_steps < 1 or self.theta_steps < 1:
            raise ParamError("grid steps must be >= 1", field="steps")
        # constructing the corner parameters enforces the domain bounds
        FamilyParams(self.p_min, self.theta_min)
        FamilyParams(self.p_max, self.theta_max)
        if self.p_min > self.p_max or self.theta_min > self.theta_max:
            raise ParamError("range minimum exceeds maximum", field="range")
        if self.scenario not in SCENARIOS:
            raise ParamError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}", field="scenario")
        if self.with_solver and self.k not in (2, 3):
            raise ParamError(f"--with-solver needs k in (2, 3), got {self.k}", field="k")
        return self

    def grid(self):
        ps = np.linspace(self.p_min, self.p_max, self.p_steps) if self.p_steps > 1 else np.array([self.p_min])
        thetas = (np.linspace(self.theta_min, self.theta_max, self.theta_steps)
                  if self.theta_steps > 1 else np.array([self.theta_min]))
        return [(float(p), float(t)) for t in thetas for p in ps]


def execute(filters=None):
    spec = filters if isinstance(filters, ScanSpec) else ScanSpec(**(filters or {}))
    spec.validate()
    columns = get_columns(spec)
    data = get_data(spec)
    return columns, data


def get_columns(spec):
    columns = [
        {"fieldname": "p", "label": "p", "fieldtype": "Float"},
        {"fieldname": "theta", "label": "Theta (rad)", "fieldtype": "Float"},
        {"fieldname": "label_2", "label": "Two settings", "fieldtype": "Data"},
        {"fieldname": "label_3", "label": "Three settings", "fieldtype": "Data"},
        {"fieldname": "label_inf", "label": "All projective", "fieldtype": "Data"},
        {"fieldname": "bowles_unsteerable", "label": "Bob cannot steer (all measurements)", "fieldtype": "Check"},
        {"fieldname": "label", "label": f"Scenario {spec.scenario}", "fieldtype": "Data"},
    ]
    if spec.with_solver:
        columns += [
            {"fieldname": "r_ab", "label": f"r A->B (k={spec.k})", "fieldtype": "Float"},
            {"fieldname": "r_ba", "label": f"r B->A (k={spec.k})", "fieldtype": "Float"},
            {"fieldname": "label_radii", "label": "Radius verdict", "fieldtype": "Data"},
        ]
    return columns


def classify_point(job):
    p, theta, spec = job
    row = {
        "p": p,
        "theta": theta,
        "label_2": classify_two_settings(p, theta),
        "label_3": classify_three_settings(p, theta),
        "label_inf": classify_infinite_settings(p, theta),
        "bowles_unsteerable": unsteerable_b_to_a_infinite(p, theta),
    }
    row["label"] = {"2": row["label_2"], "3": row["label_3"], "infinite": row["label_inf"]}[spec.scenario]

    if spec.with_solver:
        rho = make_family_state(FamilyParams(p, theta))
        settings = canonical_settings(spec.k)
        options = spec.solver or SolverOptions()
        row["r_ab"] = settings_radius(rho, settings, "ab", spec.tol, options).r
        row["r_ba"] = settings_radius(rho, settings, "ba", spec.tol, options).r
        row["label_radii"] = classify_by_radii(row["r_ab"], row["r_ba"])
    return row


def get_data(spec):
    # rows stay in grid order regardless of completion order
    jobs = [(p, theta, spec) for p, theta in spec.grid()]
    threads = spec.threads if spec.with_solver else 1
    return run_pool(classify_point, jobs, threads)


def execute_boundaries(filters=None):
    filters = filters or {}
    steps = int(filters.get("theta_steps", 50))
    if steps < 2:
        raise ParamError("theta_steps must be >= 2", field="theta_steps")
    thetas = np.linspace(float(filters.get("theta_min", 0.0)), float(filters.get("theta_max", THETA_MAX)), steps)
    curves = boundary_curves(thetas)

    columns = [
        {"fieldname": "theta", "label": "Theta (rad)", "fieldtype": "Float"},
        {"fieldname": "two_lower", "label": "1/sqrt(2)", "fieldtype": "Float"},
        {"fieldname": "three_lower", "label": "1/sqrt(3)", "fieldtype": "Float"},
        {"fieldname": "two_upper", "label": "Two-setting upper", "fieldtype": "Float"},
        {"fieldname": "three_upper", "label": "Three-setting upper", "fieldtype": "Float"},
        {"fieldname": "infinite_upper", "label": "All-measurement curve", "fieldtype": "Float"},
    ]
    data = [{c["fieldname"]: float(curves[c["fieldname"]][i]) for c in columns} for i in range(steps)]
    if not all(math.isfinite(v) for row in data for v in row.values()):
        raise ParamError("boundary evaluation produced non-finite values")
    return columns, data
