"""
Qubit Core

Pauli calculus, Bloch-vector conversion and density-matrix validation for
2x2 and 4x4 Hermitian matrices.

Conventions:
- |H> is basis index 0 (Bloch +z), |V> is basis index 1.
- Alice is the first (left) tensor factor of every two-qubit matrix.
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from epr_steering.api.steering_errors import (
    NormalizationError,
    TraceError,
    ValidationError,
)

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-9
UNIT_TOL = 1e-9

IDENTITY_2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = np.stack([SIGMA_X, SIGMA_Y, SIGMA_Z])

# (I ⊗ I) swap permutation on the computational basis |ab> -> |ba>
_SWAP = np.eye(4, dtype=complex)[[0, 2, 1, 3]]

SIDES = ("A", "B")


@dataclass(frozen=True)
class BlochVector:
    x: float
    y: float
    z: float

    @classmethod
    def from_array(cls, values):
        x, y, z = (float(v) for v in np.asarray(values, dtype=float).reshape(3))
        return cls(x, y, z)

    def as_array(self):
        return np.array([self.x, self.y, self.z])

    @property
    def norm(self):
        return float(np.linalg.norm(self.as_array()))

    @property
    def is_physical(self):
        return self.norm <= 1 + UNIT_TOL


@dataclass
class DensityReport:
    """Structured verdict of validate_density; never raised, only inspected"""

    square: bool
    hermitian: bool
    hermiticity_error: float
    trace: complex
    min_eigenvalue: float
    failures: List[str] = field(default_factory=list)

    @property
    def valid(self):
        return not self.failures

    def to_dict(self):
        return {
            "valid": self.valid,
            "square": self.square,
            "hermitian": self.hermitian,
            "hermiticity_error": self.hermiticity_error,
            "trace": [float(np.real(self.trace)), float(np.imag(self.trace))],
            "min_eigenvalue": self.min_eigenvalue,
            "failures": list(self.failures),
        }


def validate_density(matrix, tol=PSD_TOL) -> DensityReport:
    """
    Check Hermiticity, unit trace and positivity of a square matrix.

    Args:
        matrix: array-like candidate density matrix
        tol: eigenvalue tolerance; eigenvalues >= -tol pass

    Returns:
        DensityReport listing every failed check (empty list means valid)
    """
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return DensityReport(False, False, float("inf"), complex("nan"), float("nan"),
                             [f"not a square matrix: shape {m.shape}"])

    failures = []
    herm_err = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
    hermitian = herm_err <= HERMITIAN_TOL
    if not hermitian:
        failures.append(f"not Hermitian: max |M - M†| = {herm_err:.3e}")

    trace = complex(np.trace(m))
    if abs(trace - 1) > TRACE_TOL:
        failures.append(f"trace {trace.real:.12g}{trace.imag:+.3g}j differs from 1")

    min_eig = float(np.min(eigvalsh(0.5 * (m + m.conj().T))))
    if min_eig < -tol:
        failures.append(f"not positive semidefinite: min eigenvalue {min_eig:.3e}")

    return DensityReport(True, hermitian, herm_err, trace, min_eig, failures)


def eigvalsh(matrix):
    """Eigenvalues of a Hermitian matrix, ascending; closed form for 2x2"""
    m = np.asarray(matrix, dtype=complex)
    if m.shape == (2, 2):
        a, d = m[0, 0].real, m[1, 1].real
        half_gap = np.sqrt(0.25 * (a - d) ** 2 + abs(m[0, 1]) ** 2)
        mean = 0.5 * (a + d)
        return np.array([mean - half_gap, mean + half_gap])
    return np.linalg.eigvalsh(m)


def _checked(matrix, shape, name):
    m = np.array(matrix, dtype=complex)
    if m.shape != shape:
        raise ValidationError(f"{name} must have shape {shape}, got {m.shape}")
    report = validate_density(m)
    if not report.valid:
        raise ValidationError(f"{name} is not a density matrix: " + "; ".join(report.failures),
                              report=report.to_dict())
    m = 0.5 * (m + m.conj().T)
    m.setflags(write=False)
    return m


@dataclass(frozen=True, eq=False)
class QubitState:
    matrix: np.ndarray
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        if self.check:
            m = _checked(self.matrix, (2, 2), "QubitState")
        else:
            m = np.array(self.matrix, dtype=complex)
            m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def bloch(self) -> BlochVector:
        return BlochVector.from_array(bloch_components(self.matrix))


@dataclass(frozen=True, eq=False)
class TwoQubitState:
    matrix: np.ndarray
    meta: Optional[dict] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "matrix", _checked(self.matrix, (4, 4), "TwoQubitState"))


def pauli_along(n):
    """Return n·σ for a unit 3-vector n (Hermitian, traceless, eigenvalues ±1)"""
    n = np.asarray(n, dtype=float).reshape(3)
    norm = np.linalg.norm(n)
    if abs(norm - 1) > UNIT_TOL:
        raise NormalizationError(f"axis {n.tolist()} has norm {norm:.12g}, expected 1")
    return np.tensordot(n, PAULI, axes=1)


def bloch_components(matrix):
    """(tr(Mσx), tr(Mσy), tr(Mσz)) of any 2x2 operator, real part"""
    m = np.asarray(matrix, dtype=complex)
    return np.real(np.einsum("ij,kji->k", m, PAULI))


def bloch_of(rho) -> BlochVector:
    """Bloch vector of a unit-trace 2x2 Hermitian matrix"""
    m = rho.matrix if isinstance(rho, QubitState) else np.asarray(rho, dtype=complex)
    trace = np.trace(m)
    if abs(trace - 1) > TRACE_TOL:
        raise TraceError(f"trace {trace.real:.12g} differs from 1")
    return BlochVector.from_array(bloch_components(m))


def matrix_of(bloch, trace=1.0):
    """(trace·I + r·σ)/2 for a Bloch vector r"""
    r = bloch.as_array() if isinstance(bloch, BlochVector) else np.asarray(bloch, dtype=float)
    return 0.5 * (trace * IDENTITY_2 + np.tensordot(r, PAULI, axes=1))


def partial_trace(rho, side) -> QubitState:
    """
    Trace out one party of a two-qubit state.

    Args:
        rho: TwoQubitState
        side: "A" traces out Alice (returns Bob's marginal), "B" traces out Bob

    Returns:
        QubitState of the remaining party
    """
    return QubitState(reduce_operator(rho.matrix, side))


def reduce_operator(matrix, side):
    """Partial trace of any 4x4 operator; no validation"""
    t = np.asarray(matrix, dtype=complex).reshape(2, 2, 2, 2)
    if side == "A":
        return np.einsum("ijik->jk", t)
    if side == "B":
        return np.einsum("ijkj->ik", t)
    raise ValueError(f"side must be 'A' or 'B', got {side!r}")


def swap_parties(matrix):
    """Conjugate a 4x4 operator by the party swap"""
    m = np.asarray(matrix, dtype=complex)
    return _SWAP @ m @ _SWAP.T


def rotation_unitary(axis, angle):
    """exp(-i angle n·σ / 2)"""
    return np.cos(angle / 2) * IDENTITY_2 - 1j * np.sin(angle / 2) * pauli_along(axis)


def apply_local_unitaries(rho, unitary_a=None, unitary_b=None) -> TwoQubitState:
    ua = IDENTITY_2 if unitary_a is None else np.asarray(unitary_a, dtype=complex)
    ub = IDENTITY_2 if unitary_b is None else np.asarray(unitary_b, dtype=complex)
    u = np.kron(ua, ub)
    return TwoQubitState(u @ rho.matrix @ u.conj().T, meta=None)


def rotation_matrix(unitary):
    """SO(3) action R of a qubit unitary: U (r·σ) U† = (R r)·σ"""
    u = np.asarray(unitary, dtype=complex)
    rotated = np.einsum("ab,jbc,dc->jad", u, PAULI, u.conj())
    return np.real(np.einsum("jad,ida->ij", rotated, PAULI)) / 2
