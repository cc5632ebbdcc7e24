"""
Closed-form steering criteria for the state family and linear steering
inequalities S_n <= C_n.

Region bounds (theta in (0, pi/4)):
    two settings:      1/sqrt(2) < p <= 1/sqrt(1 + sin^2 2theta)
    three settings:    1/sqrt(3) < p <= 1/sqrt(1 + 2 sin^2 2theta)
    all projective:    cos^2 2theta >= (2p - 1) / ((2 - p) p^3)  (Bob cannot steer)
                       p > 1/2                                    (Alice can steer)
Lower bounds are strict, upper bounds inclusive.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import brentq

from epr_steering.api.steering_errors import CapError, ParamError
from epr_steering.steering.assemblage import (
    X_AXIS,
    Y_AXIS,
    Z_AXIS,
    MeasurementSetting,
    check_settings,
    correlation_data,
)
from epr_steering.steering.lhsm import MAX_SETTINGS, strategy_table
from epr_steering.steering.states import THETA_MAX, FamilyParams

TWO_SETTING_LOWER = 1 / math.sqrt(2)
THREE_SETTING_LOWER = 1 / math.sqrt(3)
DIRECTIONS = ("ab", "ba")
GOLDEN = (1 + math.sqrt(5)) / 2


class RegionLabel(str, Enum):
    TWO_WAY = "TwoWay"
    ONE_WAY_A_TO_B = "OneWayAtoB"
    ONE_WAY_B_TO_A = "OneWayBtoA"
    UNSTEERABLE = "Unsteerable"
    INCONCLUSIVE = "Inconclusive"

    def __str__(self):
        return self.value


def _params(p, theta):
    return FamilyParams(p, theta)


def _interior(theta):
    return 0 < theta < THETA_MAX


def two_setting_upper(theta):
    return 1 / math.sqrt(1 + math.sin(2 * theta) ** 2)


def three_setting_upper(theta):
    return 1 / math.sqrt(1 + 2 * math.sin(2 * theta) ** 2)


def _classify(p, theta, lower, upper_fn):
    params = _params(p, theta)
    upper = upper_fn(params.theta)
    if params.p > upper:
        return RegionLabel.TWO_WAY
    if _interior(params.theta) and lower < params.p <= upper:
        return RegionLabel.ONE_WAY_A_TO_B
    return RegionLabel.UNSTEERABLE


def classify_two_settings(p, theta) -> RegionLabel:
    return _classify(p, theta, TWO_SETTING_LOWER, two_setting_upper)


def classify_three_settings(p, theta) -> RegionLabel:
    return _classify(p, theta, THREE_SETTING_LOWER, three_setting_upper)


def bowles_rhs(p):
    """(2p - 1) / ((2 - p) p^3); non-positive for p <= 1/2"""
    return (2 * p - 1) / ((2 - p) * p ** 3)


def unsteerable_b_to_a_infinite(p, theta):
    """
    True when Bob cannot steer Alice with any number of projective measurements.
    p = 0 (product state) counts as unsteerable.
    """
    params = _params(p, theta)
    if params.p == 0:
        return True
    return math.cos(2 * params.theta) ** 2 >= bowles_rhs(params.p)


def steerable_a_to_b_infinite(p):
    return p > 0.5


def classify_infinite_settings(p, theta) -> RegionLabel:
    params = _params(p, theta)
    # theta = 0 is a product state for every p
    if params.theta == 0 or not steerable_a_to_b_infinite(params.p):
        return RegionLabel.UNSTEERABLE
    if unsteerable_b_to_a_infinite(params.p, params.theta):
        return RegionLabel.ONE_WAY_A_TO_B
    if classify_three_settings(params.p, params.theta) is RegionLabel.TWO_WAY:
        return RegionLabel.TWO_WAY
    return RegionLabel.INCONCLUSIVE


def classify_by_radii(r_ab, r_ba, margin=0.0) -> RegionLabel:
    """Label from steering radii; a direction steers when its radius exceeds 1 + margin"""
    ab = r_ab > 1 + margin
    ba = r_ba > 1 + margin
    if ab and ba:
        return RegionLabel.TWO_WAY
    if ab:
        return RegionLabel.ONE_WAY_A_TO_B
    if ba:
        return RegionLabel.ONE_WAY_B_TO_A
    return RegionLabel.UNSTEERABLE


def bowles_boundary(theta):
    """Largest p on the all-measurement Bob-unsteerability curve at theta"""
    target = math.cos(2 * theta) ** 2
    if target >= 1:
        return 1.0
    if target <= 0:
        return 0.5
    return brentq(lambda p: bowles_rhs(p) - target, 0.5, 1.0, xtol=1e-14)


def boundary_curves(thetas):
    """Region-map boundaries p(theta) for each theta"""
    thetas = np.asarray(thetas, dtype=float)
    return {
        "theta": thetas,
        "two_lower": np.full_like(thetas, TWO_SETTING_LOWER),
        "three_lower": np.full_like(thetas, THREE_SETTING_LOWER),
        "two_upper": np.array([two_setting_upper(t) for t in thetas]),
        "three_upper": np.array([three_setting_upper(t) for t in thetas]),
        "infinite_upper": np.array([bowles_boundary(t) for t in thetas]),
    }


# ---------------------------------------------------------------------------
# Linear steering inequalities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearIneqResult:
    n: int
    S_n: float
    C_n: float

    @property
    def violation(self):
        return self.S_n - self.C_n

    def to_dict(self):
        return {"n": self.n, "S_n": self.S_n, "C_n": self.C_n, "violation": self.violation}


def _vectors(settings):
    settings = list(settings)
    if not settings:
        raise ParamError("at least one measurement setting is required")
    return np.array([s.vector if isinstance(s, MeasurementSetting) else MeasurementSetting.along(s).vector
                     for s in settings])


def linear_S(rho, settings, direction="ba"):
    """
    S_n = (1/n) sum_k |n_k · T n_k| with the untrusted party choosing the sign
    of each declared outcome to maximize its term.
    """
    if direction not in DIRECTIONS:
        raise ParamError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
    vectors = _vectors(settings)
    T = correlation_data(rho).T
    oriented = T if direction == "ab" else T.T
    terms = np.einsum("ki,ij,kj->k", vectors, oriented, vectors)
    return float(np.mean(np.abs(terms)))


def lhs_bound_C(settings):
    """C_n = (1/n) max over sign vectors B of |sum_k B_k n_k|"""
    vectors = _vectors(settings)
    n = len(vectors)
    if n > MAX_SETTINGS:
        raise CapError(f"sign enumeration capped at {MAX_SETTINGS} settings, got {n}")
    signs = 1 - 2 * strategy_table(n)
    return float(np.max(np.linalg.norm(signs @ vectors, axis=1)) / n)


def linear_inequality(rho, n, direction="ba") -> LinearIneqResult:
    settings = canonical_settings(n)
    return LinearIneqResult(n, linear_S(rho, settings, direction), lhs_bound_C(settings))


def canonical_settings(n):
    """Symmetric axis sets: square, orthogonal triad, cube diagonals, icosahedron and dodecahedron axes"""
    phi, inv = GOLDEN, 1 / GOLDEN
    axes = {
        2: [X_AXIS.axis, Z_AXIS.axis],
        3: [X_AXIS.axis, Y_AXIS.axis, Z_AXIS.axis],
        4: [(1, 1, 1), (1, 1, -1), (1, -1, 1), (-1, 1, 1)],
        6: [(0, 1, phi), (0, 1, -phi), (1, phi, 0), (1, -phi, 0), (phi, 0, 1), (-phi, 0, 1)],
        10: [(1, 1, 1), (1, 1, -1), (1, -1, 1), (-1, 1, 1),
             (0, inv, phi), (0, inv, -phi),
             (inv, phi, 0), (inv, -phi, 0),
             (phi, 0, inv), (-phi, 0, inv)],
    }
    if n not in axes:
        raise ParamError(f"no canonical settings for n={n}; supported: {sorted(axes)}", field="n")
    settings = [MeasurementSetting.along(a) for a in axes[n]]
    check_settings(settings)
    return settings


SUPPORTED_N = (2, 3, 4, 6, 10)
