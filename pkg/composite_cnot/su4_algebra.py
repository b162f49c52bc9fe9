"""
Two-qubit operator algebra: Pauli strings, exponentials, fidelities and local invariants.

All matrices are plain numpy arrays in the computational basis |q1 q2>, with the
first tensor factor acting on qubit 1.
"""

import logging
from enum import IntEnum
from functools import reduce
from typing import NamedTuple

import numpy as np
from scipy import linalg

logger = logging.getLogger(__name__)

UNITARY_TOLERANCE = 1e-12
INVARIANT_IMAG_TOLERANCE = 1e-10

SINGLE_QUBIT_PAULIS = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)

# Magic basis columns: (|00>+|11>, -i(|00>-|11>), -i(|01>+|10>), |01>-|10>)/sqrt(2)
MAGIC_BASIS = np.array(
    [
        [1, -1j, 0, 0],
        [0, 0, -1j, 1],
        [0, 0, -1j, -1],
        [1, 1j, 0, 0],
    ],
    dtype=complex,
) / np.sqrt(2)


# Custom exceptions
class AlgebraError(Exception):
    """Base exception for operator algebra errors."""

    pass


class NotUnitaryError(AlgebraError):
    """Exception raised when a matrix expected to be unitary is not."""

    pass


class NotSpecialUnitaryError(AlgebraError):
    """Exception raised when a unit-determinant matrix is required."""

    pass


class PauliIndex(IntEnum):
    I = 0
    X = 1
    Y = 2
    Z = 3


class PauliString(NamedTuple):
    """A two-qubit Pauli operator sigma_first (x) sigma_second."""

    first: PauliIndex
    second: PauliIndex

    @classmethod
    def parse(cls, name: str) -> "PauliString":
        """
        Build a Pauli string from a two-letter name such as "ZZ" or "XI".

        Raises:
            AlgebraError: If the name is not two letters from I, X, Y, Z
        """
        name = name.strip().upper()
        if len(name) != 2 or any(c not in "IXYZ" for c in name):
            raise AlgebraError(f"Invalid Pauli string name: '{name}'")
        return cls(PauliIndex[name[0]], PauliIndex[name[1]])

    @property
    def name(self) -> str:
        return f"{self.first.name}{self.second.name}"

    @property
    def is_identity(self) -> bool:
        return self.first == PauliIndex.I and self.second == PauliIndex.I

    def __str__(self) -> str:
        return self.name


ALL_PAULI_STRINGS = tuple(
    PauliString(a, b) for a in PauliIndex for b in PauliIndex
)
NON_IDENTITY_STRINGS = ALL_PAULI_STRINGS[1:]
IDENTITY_STRING = ALL_PAULI_STRINGS[0]
ZZ = PauliString(PauliIndex.Z, PauliIndex.Z)


def pauli_matrix(p: PauliString) -> np.ndarray:
    """Return sigma_first (x) sigma_second as a 4x4 complex matrix."""
    return _PAULI_MATRICES[p]


_PAULI_MATRICES = {
    p: np.kron(SINGLE_QUBIT_PAULIS[p.first], SINGLE_QUBIT_PAULIS[p.second])
    for p in ALL_PAULI_STRINGS
}
for _m in _PAULI_MATRICES.values():
    _m.setflags(write=False)


def _factor_anticommutes(a: PauliIndex, b: PauliIndex) -> bool:
    return a != PauliIndex.I and b != PauliIndex.I and a != b


def commutation_sign(a: PauliString, b: PauliString) -> int:
    """
    Return +1 if the two Pauli strings commute and -1 if they anticommute.

    The sign is the parity of the number of tensor slots whose factors anticommute.
    """
    flips = _factor_anticommutes(a.first, b.first) + _factor_anticommutes(
        a.second, b.second
    )
    return -1 if flips % 2 else 1


IDENTITY4 = np.eye(4, dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
CNOT = np.array(
    [
        [1, 0, 0, 0],
        [0, 1, 0, 0],
        [0, 0, 0, 1],
        [0, 0, 1, 0],
    ],
    dtype=complex,
)
for _m in (IDENTITY4, HADAMARD, CNOT, MAGIC_BASIS):
    _m.setflags(write=False)


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOLERANCE) -> bool:
    """Check U^dagger U = I in max-entry norm."""
    u = np.asarray(u)
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) < tol)


def check_unitary(u: np.ndarray, tol: float = UNITARY_TOLERANCE) -> np.ndarray:
    """
    Return u unchanged if it is unitary.

    Raises:
        NotUnitaryError: If the unitarity defect exceeds tol
    """
    defect = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
    if defect >= tol:
        raise NotUnitaryError(f"Unitarity defect {defect:.3e} exceeds {tol:.1e}")
    return u


def hermitian_from_coefficients(coefficients) -> np.ndarray:
    """Sum c_p sigma_p over a mapping of PauliString -> real coefficient."""
    h = np.zeros((4, 4), dtype=complex)
    for p, c in coefficients.items():
        if c:
            h = h + c * pauli_matrix(p)
    return h


def expm_hermitian(h: np.ndarray, t: float) -> np.ndarray:
    """
    Return exp(-i h t) for Hermitian h using an eigendecomposition.

    Args:
        h: Hermitian matrix
        t: Evolution time (any real, including negative)

    Returns:
        The unitary exp(-i h t)
    """
    if t == 0:
        return np.eye(h.shape[0], dtype=complex)
    evals, evecs = linalg.eigh(h)
    return (evecs * np.exp(-1j * t * evals)) @ evecs.conj().T


def pauli_rotation(p: PauliString, angle: float) -> np.ndarray:
    """exp(-i angle/2 sigma_p), exact since sigma_p squares to the identity."""
    return np.cos(angle / 2) * IDENTITY4 - 1j * np.sin(angle / 2) * pauli_matrix(p)


def su2_exp(v) -> np.ndarray:
    """
    Return exp(-i v . sigma) for a real 3-vector v.

    Args:
        v: Rotation vector (vx, vy, vz); the rotation angle about v/|v| is 2|v|
    """
    v = np.asarray(v, dtype=float)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        return np.eye(2, dtype=complex)
    generator = reduce(
        np.add, (c * s for c, s in zip(v / norm, SINGLE_QUBIT_PAULIS[1:]))
    )
    return np.cos(norm) * np.eye(2) - 1j * np.sin(norm) * generator


def local_gate(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Tensor product a (x) b of two single-qubit gates."""
    return np.kron(a, b)


def phase_normalized(u: np.ndarray) -> np.ndarray:
    """Divide out the phase of the largest-magnitude entry."""
    flat = u.reshape(-1)
    pivot = flat[np.argmax(np.abs(flat))]
    return u * (abs(pivot) / pivot)


def equal_up_to_phase(u: np.ndarray, v: np.ndarray, tol: float = 1e-10) -> bool:
    return bool(np.max(np.abs(phase_normalized(u) - phase_normalized(v))) < tol)


def average_fidelity(u: np.ndarray, v: np.ndarray) -> float:
    """
    Average gate fidelity F = (d + |Tr(v^dagger u)|^2) / (d (d + 1)).

    Invariant under a global phase of either argument.
    """
    d = u.shape[0]
    overlap = np.trace(v.conj().T @ u)
    return float((d + abs(overlap) ** 2) / (d * (d + 1)))


def infidelity(u: np.ndarray, v: np.ndarray) -> float:
    """
    Return 1 - average_fidelity(u, v), accurate for very small values.

    Uses d - |Tr W| = ||W e^{-i arg Tr W} - I||_F^2 / 2 for W = v^dagger u, which
    avoids the cancellation in d^2 - |Tr W|^2.
    """
    d = u.shape[0]
    w = v.conj().T @ u
    overlap = np.trace(w)
    magnitude = abs(overlap)
    if magnitude == 0.0:
        return float(d / (d + 1))
    aligned = w * (magnitude / overlap)
    gap = 0.5 * float(np.sum(np.abs(aligned - np.eye(d)) ** 2))
    gap = min(gap, float(d))
    return float(gap * (2 * d - gap) / (d * (d + 1)))


def _normalize_determinant(u: np.ndarray) -> np.ndarray:
    det = np.linalg.det(u)
    return u / det ** (1.0 / u.shape[0])


class LocalInvariants(NamedTuple):
    g1: float
    g2: float


def makhlin_invariants(u: np.ndarray) -> LocalInvariants:
    """
    Compute the Makhlin local invariants (g1, g2) of a two-qubit unitary.

    The input is first scaled to unit determinant with the principal fourth root.
    g1 is returned as a real number; a warning is logged if its imaginary part is
    not negligible, which signals a non-special-unitary input.

    Args:
        u: 4x4 unitary

    Returns:
        LocalInvariants(g1, g2)
    """
    su = _normalize_determinant(np.asarray(u, dtype=complex))
    m_basis = MAGIC_BASIS.conj().T @ su @ MAGIC_BASIS
    m = m_basis.T @ m_basis
    tr_m = np.trace(m)
    g1 = tr_m**2 / 16
    g2 = (tr_m**2 - np.trace(m @ m)) / 4
    if abs(g1.imag) > INVARIANT_IMAG_TOLERANCE:
        logger.warning(
            f"Imaginary part of g1 is {g1.imag:.3e}; input may not be special unitary"
        )
    return LocalInvariants(float(g1.real), float(g2.real))


def su2_components(a: np.ndarray) -> tuple:
    """
    Decompose a in SU(2) as L1 I + i L2 X + i L3 Y + i L4 Z.

    Args:
        a: 2x2 matrix with unit determinant

    Returns:
        Tuple (L1, L2, L3, L4) of reals with unit norm

    Raises:
        NotSpecialUnitaryError: If det(a) differs from 1
    """
    a = np.asarray(a, dtype=complex)
    if a.shape != (2, 2):
        raise NotSpecialUnitaryError(f"Expected a 2x2 matrix, got shape {a.shape}")
    det = np.linalg.det(a)
    if abs(det - 1) > 1e-10:
        raise NotSpecialUnitaryError(f"Determinant {det:.6g} is not 1")
    return su2_coefficients(a)


def su2_coefficients(m: np.ndarray) -> tuple:
    """Real coefficients (c1..c4) of m = c1 I + i c2 X + i c3 Y + i c4 Z, without checks."""
    return (
        float(np.trace(m).real / 2),
        float(np.trace(SINGLE_QUBIT_PAULIS[1] @ m).imag / 2),
        float(np.trace(SINGLE_QUBIT_PAULIS[2] @ m).imag / 2),
        float(np.trace(SINGLE_QUBIT_PAULIS[3] @ m).imag / 2),
    )


def random_su2(rng: np.random.Generator) -> np.ndarray:
    """Draw a Haar-random SU(2) matrix."""
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    return (
        q[0] * np.eye(2)
        + 1j * q[1] * SINGLE_QUBIT_PAULIS[1]
        + 1j * q[2] * SINGLE_QUBIT_PAULIS[2]
        + 1j * q[3] * SINGLE_QUBIT_PAULIS[3]
    )
