"""
Two-Qubit States

Construction of the mixed Schmidt-state family

    rho(p, theta) = p |psi(theta)><psi(theta)| + (1 - p) I/2 ⊗ rho_B(theta)
    |psi(theta)>  = cos(theta)|HH> + sin(theta)|VV>

and JSON persistence of arbitrary two-qubit states.

State file schema:
    {"dim": [4, 4],
     "matrix": [[[re, im], x4] x4],     row-major, Alice-first
     "meta": {"p": ..., "theta": ...}}  optional
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from epr_steering.api.steering_errors import ParamError, ParseError, ValidationError
from epr_steering.steering.qubit import IDENTITY_2, TwoQubitState, validate_density

THETA_MAX = math.pi / 4
# Inputs such as "0.7854" sit a hair above pi/4; within this slack they snap to the bound
ANGLE_SLACK = 1e-5


def _clamp(value, lower, upper, slack, name):
    value = float(value)
    if not math.isfinite(value):
        raise ParamError(f"{name} must be finite, got {value}", field=name)
    if value < lower - slack or value > upper + slack:
        raise ParamError(f"{name}={value} outside [{lower:.10g}, {upper:.10g}]", field=name)
    return min(max(value, lower), upper)


@dataclass(frozen=True)
class FamilyParams:
    p: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "p", _clamp(self.p, 0.0, 1.0, 0.0, "p"))
        object.__setattr__(self, "theta", _clamp(self.theta, 0.0, THETA_MAX, ANGLE_SLACK, "theta"))

    def to_dict(self):
        return {"p": self.p, "theta": self.theta}


def schmidt_vector(theta):
    return np.array([math.cos(theta), 0, 0, math.sin(theta)], dtype=complex)


def make_family_state(params: FamilyParams) -> TwoQubitState:
    """
    Build rho(p, theta) of the state family.

    Args:
        params: FamilyParams (bounds already enforced)

    Returns:
        TwoQubitState with the parameters kept as metadata
    """
    if not isinstance(params, FamilyParams):
        raise ParamError("make_family_state expects FamilyParams")
    psi = schmidt_vector(params.theta)
    pure = np.outer(psi, psi.conj())
    rho_b = np.diag([math.cos(params.theta) ** 2, math.sin(params.theta) ** 2]).astype(complex)
    noise = np.kron(IDENTITY_2 / 2, rho_b)
    matrix = params.p * pure + (1 - params.p) * noise
    return TwoQubitState(matrix, meta=params.to_dict())


def make_werner(p) -> TwoQubitState:
    """theta = pi/4 member: p |Phi+><Phi+| + (1 - p) I/4"""
    return make_family_state(FamilyParams(p, THETA_MAX))


def product_state(rho_a, rho_b) -> TwoQubitState:
    a = rho_a.matrix if hasattr(rho_a, "matrix") else np.asarray(rho_a, dtype=complex)
    b = rho_b.matrix if hasattr(rho_b, "matrix") else np.asarray(rho_b, dtype=complex)
    return TwoQubitState(np.kron(a, b))


def random_two_qubit_state(rng, rank=4) -> TwoQubitState:
    """Random state G G† / tr(G G†) with G a complex Ginibre 4 x rank matrix"""
    g = rng.standard_normal((4, rank)) + 1j * rng.standard_normal((4, rank))
    m = g @ g.conj().T
    return TwoQubitState(m / np.trace(m).real)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def state_to_dict(rho: TwoQubitState):
    return {
        "dim": [4, 4],
        "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in rho.matrix],
        **({"meta": dict(rho.meta)} if rho.meta else {}),
    }


def save_state(rho: TwoQubitState, path):
    """Write a state file; the file is replaced atomically"""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(state_to_dict(rho), indent=2) + "\n", encoding="utf-8")
    tmp.replace(path)
    return path


def load_state(path) -> TwoQubitState:
    """
    Read a state file.

    Raises:
        ParseError: malformed JSON or schema violation (with field context)
        ValidationError: well-formed matrix that is not a density matrix
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"cannot read state file {path}: {e}", path=str(path))
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}",
                         path=str(path), line=e.lineno)
    return state_from_dict(data, source=str(path))


def state_from_dict(data, source="<dict>") -> TwoQubitState:
    if not isinstance(data, dict):
        raise ParseError(f"{source}: top level must be an object", path=source)
    if data.get("dim", [4, 4]) != [4, 4]:
        raise ParseError(f"{source}: field 'dim' must be [4, 4], got {data.get('dim')}",
                         path=source, field="dim")

    rows = data.get("matrix")
    if not isinstance(rows, list) or len(rows) != 4:
        raise ParseError(f"{source}: field 'matrix' must hold 4 rows", path=source, field="matrix")

    matrix = np.zeros((4, 4), dtype=complex)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != 4:
            raise ParseError(f"{source}: matrix row {i} must hold 4 entries",
                             path=source, field=f"matrix[{i}]")
        for j, entry in enumerate(row):
            try:
                re_part, im_part = entry
                matrix[i, j] = complex(float(re_part), float(im_part))
            except (TypeError, ValueError):
                raise ParseError(f"{source}: matrix[{i}][{j}] must be [re, im], got {entry!r}",
                                 path=source, field=f"matrix[{i}][{j}]")

    meta = data.get("meta")
    if meta is not None and not isinstance(meta, dict):
        raise ParseError(f"{source}: field 'meta' must be an object", path=source, field="meta")

    report = validate_density(matrix)
    if not report.valid:
        raise ValidationError(f"{source}: " + "; ".join(report.failures),
                              path=source, report=report.to_dict())
    return TwoQubitState(matrix, meta=meta)
