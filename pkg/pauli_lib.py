"""Pauli strings as pairs of bitmasks.

Factor k of P_1 ⊗ ... ⊗ P_n sits at bit k-1 of both masks: p1 marks the
non-diagonal factors {X, Y}, p2 marks {Y, Z}. A basis index i carries qubit k
at bit k-1 as well.
"""

from dataclasses import dataclass

import numpy as np

MAX_QUBITS = 64
LETTERS = "IXYZ"
BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
LETTER_OF = {bits: letter for letter, bits in BITS.items()}
PHASE_VALUES = (1, 1j, -1, -1j)


@dataclass(frozen=True)
class Phase4:
    """A fourth root of unity i**exponent."""

    exponent: int = 0

    def __post_init__(self):
        object.__setattr__(self, "exponent", self.exponent % 4)

    def __mul__(self, other):
        return Phase4(self.exponent + other.exponent)

    def conjugate(self):
        return Phase4(4 - self.exponent)

    @property
    def value(self):
        return PHASE_VALUES[self.exponent]

    def __complex__(self):
        return complex(self.value)


@dataclass(frozen=True)
class PauliString:
    n_qubits: int
    p1: int = 0
    p2: int = 0

    def __post_init__(self):
        # n_qubits == 0 is the empty suffix of an unpartitioned state
        if not 0 <= self.n_qubits <= MAX_QUBITS:
            raise ValueError(f"n_qubits must be in 0..{MAX_QUBITS}: {self.n_qubits}")
        limit = 1 << self.n_qubits
        if not (0 <= self.p1 < limit and 0 <= self.p2 < limit):
            raise ValueError(
                f"masks ({self.p1}, {self.p2}) exceed {self.n_qubits} qubits"
            )

    @property
    def is_diagonal(self):
        return self.p1 == 0

    @property
    def is_identity(self):
        return self.p1 == 0 and self.p2 == 0

    @property
    def y_count(self):
        return (self.p1 & self.p2).bit_count()

    def __str__(self):
        return decode(self)


def parity(x):
    return x.bit_count() & 1


def encode(word):
    n = len(word)
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"Pauli word length must be in 1..{MAX_QUBITS}: {n}")
    p1 = p2 = 0
    for k, letter in enumerate(word.upper()):
        try:
            b1, b2 = BITS[letter]
        except KeyError:
            raise ValueError(f"Invalid Pauli letter {letter!r} in {word!r}") from None
        p1 |= b1 << k
        p2 |= b2 << k
    return PauliString(n, p1, p2)


def decode(pauli):
    return "".join(
        LETTER_OF[(pauli.p1 >> k) & 1, (pauli.p2 >> k) & 1]
        for k in range(pauli.n_qubits)
    )


def identity(n):
    return PauliString(n)


def apply_to_basis(pauli, i):
    """P|i> = omega |j> with j = i ^ p1."""
    j = i ^ pauli.p1
    exponent = pauli.y_count + 2 * parity(pauli.p2 & i)
    return j, Phase4(exponent)


def phases(pauli, indices):
    """Vectorized omega for every index of an unsigned integer array."""
    x = np.asarray(indices, dtype=np.uint64) & np.uint64(pauli.p2)
    for shift in (32, 16, 8, 4, 2, 1):
        x = x ^ (x >> np.uint64(shift))
    signs = 1.0 - 2.0 * (x & np.uint64(1)).astype(np.float64)
    return complex(PHASE_VALUES[pauli.y_count % 4]) * signs


def commutes(a, b):
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"Qubit counts differ: {a.n_qubits} vs {b.n_qubits}")
    return parity(a.p1 & b.p2) == parity(a.p2 & b.p1)


def split_suffix(pauli, m):
    """Split into the lower n-m factors and the upper m-factor suffix."""
    n = pauli.n_qubits
    if not 0 <= m < n:
        raise ValueError(f"Suffix length must be in 0..{n - 1}: {m}")
    low = n - m
    mask = (1 << low) - 1
    lower = PauliString(low, pauli.p1 & mask, pauli.p2 & mask)
    upper = PauliString(m, pauli.p1 >> low, pauli.p2 >> low)
    return lower, upper


def join_suffix(lower, upper):
    low = lower.n_qubits
    return PauliString(
        low + upper.n_qubits,
        lower.p1 | (upper.p1 << low),
        lower.p2 | (upper.p2 << low),
    )


def sort_key(pauli):
    # I < X < Y < Z is alphabetical, factor 1 most significant
    return decode(pauli)
