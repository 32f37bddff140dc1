"""Dense brute-force reference operators and spectra for small systems."""

import functools
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from common_lib import ORACLE_MAX_QUBITS
from formulas_lib import step_stream
from pauli_lib import decode

DENSE_PAULI_MAX_QUBITS = 12
EFFECTIVE_MAX_QUBITS = 8
DEGENERACY_GAP = 1e-10
MIN_OVERLAP = 0.5

PAULI_MATRICES = {
    "I": np.array([[1, 0], [0, 1]], dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


class OracleError(ValueError):
    pass


@dataclass(frozen=True)
class GroundState:
    energy: float
    vector: np.ndarray
    degenerate: bool


def _check_size(n, limit):
    if n > limit:
        raise OracleError(f"Dense oracle is limited to {limit} qubits: n={n}")


def dense_pauli(pauli, max_qubits=DENSE_PAULI_MAX_QUBITS):
    _check_size(pauli.n_qubits, max_qubits)
    # np.kron puts its first factor on the high bits; qubit 1 is bit 0
    factors = [PAULI_MATRICES[letter] for letter in reversed(decode(pauli))]
    return functools.reduce(np.kron, factors, np.eye(1, dtype=np.complex128))


def dense_rotation(pauli, phi, max_qubits=DENSE_PAULI_MAX_QUBITS):
    matrix = dense_pauli(pauli, max_qubits)
    return np.cos(phi) * np.eye(matrix.shape[0]) + 1j * np.sin(phi) * matrix


def dense_stream(rotations, n_qubits, max_qubits=DENSE_PAULI_MAX_QUBITS):
    """Operator product R_1 R_2 ... R_L of a rotation stream."""
    _check_size(n_qubits, max_qubits)
    unitary = np.eye(1 << n_qubits, dtype=np.complex128)
    for pauli, phi in rotations:
        unitary = unitary @ dense_rotation(pauli, phi, max_qubits)
    return unitary


def dense_apply_pauli(pauli, state):
    """P|state> by contracting each 2x2 factor with its tensor axis."""
    n = pauli.n_qubits
    tensor = np.asarray(state, dtype=np.complex128).reshape((2,) * n)
    for k, letter in enumerate(decode(pauli)):
        if letter != "I":
            # C-order reshape: axis 0 is the highest bit, qubit k+1 is axis n-1-k
            axis = n - 1 - k
            tensor = np.moveaxis(
                np.tensordot(PAULI_MATRICES[letter], tensor, axes=([1], [axis])),
                0,
                axis,
            )
    return tensor.reshape(-1)


def apply_dense_stream(state, rotations):
    # Acts right-to-left on the vector; never builds 2^n x 2^n matrices
    n_qubits = state.shape[0].bit_length() - 1
    state = np.array(state, dtype=np.complex128)
    for pauli, phi in reversed(list(rotations)):
        if pauli.n_qubits != n_qubits:
            raise ValueError(
                f"Rotation on {pauli.n_qubits} qubits, state on {n_qubits}"
            )
        state = np.cos(phi) * state + 1j * np.sin(phi) * dense_apply_pauli(pauli, state)
    return state


def dense_hamiltonian(hamiltonian, max_qubits=ORACLE_MAX_QUBITS):
    n = hamiltonian.n_qubits
    _check_size(n, max_qubits)
    matrix = hamiltonian.energy_offset * np.eye(1 << n, dtype=np.complex128)
    for h, pauli in hamiltonian.terms:
        matrix += h * dense_pauli(pauli, max_qubits)
    hermitian = np.abs(matrix - matrix.conj().T).max() <= 1e-12
    assert hermitian, "Hamiltonian not Hermitian"
    return matrix


def exact_evolution(hamiltonian, t, state, max_qubits=ORACLE_MAX_QUBITS):
    """exp(i t H) |state>, via the eigendecomposition of H."""
    energies, vectors = scipy.linalg.eigh(dense_hamiltonian(hamiltonian, max_qubits))
    amplitudes = vectors.conj().T @ np.asarray(state, dtype=np.complex128)
    return vectors @ (np.exp(1j * t * energies) * amplitudes)


def ground_state(hamiltonian, max_qubits=ORACLE_MAX_QUBITS):
    energies, vectors = scipy.linalg.eigh(dense_hamiltonian(hamiltonian, max_qubits))
    degenerate = len(energies) > 1 and energies[1] - energies[0] < DEGENERACY_GAP
    return GroundState(float(energies[0]), vectors[:, 0], bool(degenerate))


def effective_ground_energy(
    split, delta, order=2, max_qubits=EFFECTIVE_MAX_QUBITS, min_overlap=MIN_OVERLAP
):
    """Ground energy of the effective Hamiltonian of one deterministic Trotter step.

    The eigenvector of the step unitary with the largest overlap with the
    exact ground state selects the eigenphase; the energy is phase / delta on
    the principal branch, plus the identity offset.
    """
    if not split.is_deterministic:
        raise OracleError("Effective Hamiltonians exist for deterministic steps only")
    if delta == 0:
        raise OracleError("delta must be non-zero")
    _check_size(split.n_qubits, max_qubits)

    deterministic = split.deterministic
    reference = ground_state(deterministic, max_qubits)
    stream = step_stream(deterministic, delta, order)
    unitary = dense_stream(stream, split.n_qubits, max_qubits)

    # Schur vectors of a normal matrix form an orthonormal eigenbasis
    schur_form, eigenvectors = scipy.linalg.schur(unitary, output="complex")
    eigenvalues = np.diag(schur_form)
    overlaps = np.abs(eigenvectors.conj().T @ reference.vector) ** 2
    best = int(np.argmax(overlaps))
    if overlaps[best] < min_overlap:
        raise OracleError(
            f"Ambiguous effective ground state: best overlap {overlaps[best]:.3f}"
        )
    return float(np.angle(eigenvalues[best]) / delta) + deterministic.energy_offset
