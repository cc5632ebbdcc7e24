"""
Assemblages

Measurement effects M_{a|n} = (I + (-1)^a n·σ)/2, the conditional states

    rho~_{a|n} = Tr_A((M_{a|n} ⊗ I_B) rho_AB)

they prepare on the steered party, and the correlation structure (T, a_A, b_B)
behind the canonical choice of settings.

Members are stored unnormalized: trace = outcome probability. Measuring on
side B swaps the tensor factors and reuses the side-A code path.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from epr_steering.api.steering_errors import DuplicateSettingError, NormalizationError, ParamError
from epr_steering.steering.qubit import (
    IDENTITY_2,
    PAULI,
    UNIT_TOL,
    QubitState,
    bloch_components,
    eigvalsh,
    matrix_of,
    pauli_along,
    reduce_operator,
    swap_parties,
)

NO_SIGNALLING_TOL = 1e-9
# Two axes closer than this to parallel or antiparallel count as the same setting
DUPLICATE_COS = 1 - 1e-9


@dataclass(frozen=True)
class MeasurementSetting:
    axis: Tuple[float, float, float]

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float).reshape(3)
        norm = float(np.linalg.norm(axis))
        if abs(norm - 1) > UNIT_TOL:
            raise NormalizationError(f"setting axis {axis.tolist()} has norm {norm:.12g}")
        object.__setattr__(self, "axis", tuple(float(c) for c in axis))

    @classmethod
    def along(cls, vector):
        """Setting along an arbitrary non-zero vector (normalized here)"""
        v = np.asarray(vector, dtype=float).reshape(3)
        norm = np.linalg.norm(v)
        if norm == 0:
            raise NormalizationError("setting axis must be non-zero")
        return cls(tuple(v / norm))

    @classmethod
    def from_angles(cls, polar, azimuth):
        return cls((math.sin(polar) * math.cos(azimuth),
                    math.sin(polar) * math.sin(azimuth),
                    math.cos(polar)))

    @property
    def vector(self):
        return np.array(self.axis)

    def angles(self):
        x, y, z = self.axis
        return math.acos(max(-1.0, min(1.0, z))), math.atan2(y, x)

    def to_list(self):
        return list(self.axis)


X_AXIS = MeasurementSetting((1.0, 0.0, 0.0))
Y_AXIS = MeasurementSetting((0.0, 1.0, 0.0))
Z_AXIS = MeasurementSetting((0.0, 0.0, 1.0))


@dataclass(frozen=True, eq=False)
class ConditionalState:
    setting_index: int
    outcome: int
    matrix: np.ndarray

    @property
    def probability(self):
        return float(np.real(np.trace(self.matrix)))

    @property
    def bloch(self):
        """Unnormalized Bloch vector tr(rho~ σ)"""
        return bloch_components(self.matrix)

    @property
    def normalized_bloch(self):
        prob = self.probability
        return self.bloch / prob if prob > 0 else np.zeros(3)

    def is_physical(self, tol=1e-9):
        return float(np.min(eigvalsh(self.matrix))) >= -tol


@dataclass(frozen=True, eq=False)
class Assemblage:
    settings: Tuple[MeasurementSetting, ...]
    members: Tuple[Tuple[ConditionalState, ConditionalState], ...]
    reduced: QubitState
    measuring_side: str = "A"

    @property
    def k(self):
        return len(self.settings)

    @property
    def steered_side(self):
        return "B" if self.measuring_side == "A" else "A"

    def probabilities(self):
        """(k, 2) array of P(a|n_j)"""
        return np.array([[m.probability for m in pair] for pair in self.members])

    def blochs(self):
        """(k, 2, 3) array of unnormalized conditional Bloch vectors"""
        return np.array([[m.bloch for m in pair] for pair in self.members])

    def reduced_bloch(self):
        return bloch_components(self.reduced.matrix)

    def no_signalling_error(self):
        return max(float(np.max(np.abs(pair[0].matrix + pair[1].matrix - self.reduced.matrix)))
                   for pair in self.members)

    @classmethod
    def from_moments(cls, settings, probabilities, blochs, reduced_bloch, measuring_side="A"):
        """Assemblage whose member (j, a) is (P I + β·σ)/2; no physicality checks"""
        probabilities = np.asarray(probabilities, dtype=float)
        blochs = np.asarray(blochs, dtype=float)
        members = tuple(
            tuple(ConditionalState(j, a, matrix_of(blochs[j, a], trace=probabilities[j, a]))
                  for a in (0, 1))
            for j in range(len(settings))
        )
        reduced = QubitState(matrix_of(reduced_bloch), check=False)
        return cls(tuple(settings), members, reduced, measuring_side)

    def to_dict(self):
        return {
            "measuring_side": self.measuring_side,
            "settings": [s.to_list() for s in self.settings],
            "reduced_bloch": self.reduced_bloch().tolist(),
            "members": [
                {
                    "setting_index": m.setting_index,
                    "outcome": m.outcome,
                    "probability": m.probability,
                    "bloch": m.bloch.tolist(),
                }
                for pair in self.members for m in pair
            ],
        }


def effect(a, setting):
    """M_{a|n} = (I + (-1)^a n·σ)/2"""
    if a not in (0, 1):
        raise ParamError(f"outcome must be 0 or 1, got {a!r}")
    axis = setting.axis if isinstance(setting, MeasurementSetting) else setting
    return 0.5 * (IDENTITY_2 + (-1) ** a * pauli_along(axis))


def _oriented(rho, measuring_side):
    if measuring_side == "A":
        return rho.matrix
    if measuring_side == "B":
        return swap_parties(rho.matrix)
    raise ParamError(f"measuring_side must be 'A' or 'B', got {measuring_side!r}")


def conditional_state(rho, a, setting, measuring_side="A", setting_index=0) -> ConditionalState:
    """
    Unnormalized conditional state of the party that does not measure.

    Args:
        rho: TwoQubitState
        a: outcome 0 or 1
        setting: MeasurementSetting of the measuring party
        measuring_side: "A" (Alice measures, Bob is steered) or "B"

    Returns:
        ConditionalState with trace equal to the Born probability of a
    """
    m = _oriented(rho, measuring_side)
    op = np.kron(effect(a, setting), IDENTITY_2) @ m
    return ConditionalState(setting_index, a, reduce_operator(op, "A"))


def check_settings(settings):
    if not settings:
        raise ParamError("at least one measurement setting is required")
    vectors = np.array([s.vector for s in settings])
    overlaps = np.abs(vectors @ vectors.T)
    np.fill_diagonal(overlaps, 0)
    i, j = np.unravel_index(np.argmax(overlaps), overlaps.shape)
    if overlaps[i, j] >= DUPLICATE_COS:
        raise DuplicateSettingError(
            f"settings {i} and {j} are equal or antipodal",
            settings=[s.to_list() for s in settings],
        )


def build_assemblage(rho, settings, measuring_side="A") -> Assemblage:
    """Conditional states for every (setting, outcome) plus the steered marginal"""
    settings = tuple(settings)
    check_settings(settings)
    members = tuple(
        tuple(conditional_state(rho, a, s, measuring_side, setting_index=j) for a in (0, 1))
        for j, s in enumerate(settings)
    )
    steered = "B" if measuring_side == "A" else "A"
    reduced = QubitState(reduce_operator(rho.matrix, "A" if steered == "B" else "B"))
    return Assemblage(settings, members, reduced, measuring_side)


# ---------------------------------------------------------------------------
# Correlation structure
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CorrelationData:
    T: np.ndarray
    a_A: np.ndarray
    b_B: np.ndarray
    singular_values: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "singular_values", np.linalg.svd(self.T, compute_uv=False))

    def steering_ellipsoid(self, steered="B") -> Optional[dict]:
        """
        Centre and shape matrix of the steered party's steering ellipsoid.

        Returns None when the steering party's marginal is pure (the ellipsoid
        collapses onto the marginal).
        """
        T, a, b = (self.T, self.a_A, self.b_B) if steered == "B" else (self.T.T, self.b_B, self.a_A)
        gamma = 1 - float(a @ a)
        if gamma <= 1e-12:
            return None
        centre = (b - T.T @ a) / gamma
        shear = T.T - np.outer(b, a)
        shape = shear @ (np.eye(3) + np.outer(a, a) / gamma) @ shear.T / gamma
        semiaxes, axes = np.linalg.eigh(0.5 * (shape + shape.T))
        return {
            "centre": centre,
            "shape": shape,
            "semiaxes": np.sqrt(np.clip(semiaxes, 0, None)),
            "axes": axes,
        }

    def to_dict(self):
        return {"T": self.T.tolist(), "a_A": self.a_A.tolist(), "b_B": self.b_B.tolist()}


def correlation_data(rho) -> CorrelationData:
    """T_ij = tr(rho σ_i⊗σ_j) with the local Bloch vectors of both parties"""
    m = rho.matrix
    paulis = np.concatenate([IDENTITY_2[None], PAULI])
    products = np.einsum("iab,jcd->ijacbd", paulis, paulis).reshape(4, 4, 4, 4)
    full = np.real(np.einsum("ijkl,lk->ij", products, m))
    return CorrelationData(T=full[1:, 1:].copy(), a_A=full[1:, 0].copy(), b_B=full[0, 1:].copy())
