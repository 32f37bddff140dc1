import numpy as np
import pytest

from hamiltonian_lib import from_terms, parse
from pauli_lib import PauliString, encode
from state_lib import random_state


def random_pauli_string(n, rng):
    return PauliString(n, int(rng.integers(0, 1 << n)), int(rng.integers(0, 1 << n)))


def random_rotations(n, length, rng):
    return [
        (random_pauli_string(n, rng), float(rng.uniform(-np.pi, np.pi)))
        for _ in range(length)
    ]


def ising_chain(n, coupling, field, longitudinal=0.0):
    """-J sum Z_k Z_k+1 - g sum X_k - h sum Z_k, open boundary."""
    terms = []
    for k in range(n - 1):
        terms.append((-coupling, encode("I" * k + "ZZ" + "I" * (n - k - 2))))
    for k in range(n):
        word = "I" * k + "{}" + "I" * (n - k - 1)
        terms.append((-field, encode(word.format("X"))))
        if longitudinal:
            terms.append((-longitudinal, encode(word.format("Z"))))
    return from_terms(n, terms)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def psi(rng):
    def make(n):
        return random_state(n, rng)

    return make


@pytest.fixture
def two_term():
    """0.5 X + 0.3 Z on one qubit."""
    return parse("0.5 X\n0.3 Z\n")


@pytest.fixture
def write_file(tmp_path):
    def write(name, text):
        path = tmp_path / name
        path.write_text(text)
        return path

    return write
