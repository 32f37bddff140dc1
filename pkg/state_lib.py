"""In-place kernels on a single amplitude block.

An amplitude block is a contiguous 1-D complex128 array of length 2**q.
"""

import functools
import re

import numpy as np

from common_lib import InputFormatError, content_lines, transform
from pauli_lib import phases

SQRT1_2 = np.sqrt(0.5)

STATE_TRANSFORMERS = [
    (re.compile(r"^(\d+)\s+(\S+)\s+(\S+)$"), (1, 2, 3)),
    (re.compile(r"^(\d+)\s+(\S+)$"), (1, 2, "0")),
]


def qubit_count(block):
    size = block.shape[0]
    if block.ndim != 1 or size == 0 or size & (size - 1):
        raise ValueError(f"Amplitude block length is not a power of two: {size}")
    return size.bit_length() - 1


@functools.lru_cache(maxsize=64)
def _lower_members(q, bit):
    # All q-bit indices with `bit` cleared, ascending
    x = np.arange(1 << (q - 1), dtype=np.uint64)
    low = x & np.uint64((1 << bit) - 1)
    members = ((x >> np.uint64(bit)) << np.uint64(bit + 1)) | low
    members.setflags(write=False)
    return members


@functools.lru_cache(maxsize=8)
def _all_indices(q):
    indices = np.arange(1 << q, dtype=np.uint64)
    indices.setflags(write=False)
    return indices


def pair_indices(q, p1):
    """Lower pair members i and their partners i ^ p1, i ascending."""
    if p1 == 0:
        raise ValueError("Diagonal strings have no index pairs")
    lower = _lower_members(q, p1.bit_length() - 1)
    return lower, lower ^ np.uint64(p1)


def apply_rotation(block, pauli, phi):
    """exp(i phi P) applied in place."""
    q = qubit_count(block)
    if pauli.n_qubits != q:
        raise ValueError(f"Pauli string on {pauli.n_qubits} qubits, block on {q}")
    c, s = np.cos(phi), np.sin(phi)

    if pauli.is_diagonal:
        block *= c + 1j * s * phases(pauli, _all_indices(q))
        return

    lower, upper = pair_indices(q, pauli.p1)
    a_lower = block[lower]
    a_upper = block[upper]
    block[lower] = c * a_lower + 1j * s * phases(pauli, upper) * a_upper
    block[upper] = c * a_upper + 1j * s * phases(pauli, lower) * a_lower


def apply_rotation_sequence(block, sequence, sign=1):
    # Factor 1 is leftmost in the operator product, so it acts last
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1: {sign}")
    for pauli, phi in reversed(sequence):
        apply_rotation(block, pauli, sign * phi)


def butterfly(a, b):
    """(a, b) <- ((a + b)/sqrt2, (a - b)/sqrt2), in place."""
    if a.shape != b.shape:
        raise ValueError(f"Block shapes differ: {a.shape} vs {b.shape}")
    total = a + b
    np.subtract(a, b, out=b)
    b *= SQRT1_2
    np.multiply(total, SQRT1_2, out=a)


def inner_product(a, b):
    if a.shape != b.shape:
        raise ValueError(f"Block shapes differ: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def norm2(a):
    return float(np.vdot(a, a).real)


def basis_state(n, index):
    if not 0 <= index < 1 << n:
        raise ValueError(f"Basis index {index} out of range for {n} qubits")
    state = np.zeros(1 << n, dtype=np.complex128)
    state[index] = 1.0
    return state


def random_state(n, rng):
    state = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    return state / np.sqrt(norm2(state))


def bitstring_index(bits):
    # Qubit 1 is the leftmost character
    return sum(1 << k for k, bit in enumerate(bits) if bit == "1")


def parse_state(text, n):
    state = np.zeros(1 << n, dtype=np.complex128)
    for lineno, line in content_lines(text):
        token, re_part, im_part = transform(line, STATE_TRANSFORMERS)
        if len(token) == n and set(token) <= {"0", "1"}:
            index = bitstring_index(token)
        else:
            index = int(token)
        if index >= 1 << n:
            raise InputFormatError(f"line {lineno}: index {token} exceeds {n} qubits")
        try:
            state[index] = complex(float(re_part), float(im_part))
        except ValueError:
            raise InputFormatError(f"line {lineno}: bad amplitude {line!r}") from None
    return state


def format_state(state, atol=0.0):
    lines = []
    for index in np.flatnonzero(np.abs(state) > atol):
        value = state[index]
        lines.append(f"{index} {value.real:.17g} {value.imag:.17g}\n")
    return "".join(lines)
