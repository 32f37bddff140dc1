import logging
import math
import re
from dataclasses import dataclass

import numpy as np
import pandas as pd

from common_lib import InputFormatError, content_lines, read_text, transform
from fabric_lib import RotationGroup
from pauli_lib import commutes, decode, encode, sort_key, split_suffix

logger = logging.getLogger(__name__)

TERM_TRANSFORMERS = [
    (re.compile(r"^(\S+)\s+([IXYZixyz]+)$"), (1, 2)),
]


@dataclass(frozen=True)
class Hamiltonian:
    n_qubits: int
    terms: tuple
    energy_offset: float = 0.0

    def __len__(self):
        return len(self.terms)

    @property
    def coefficients(self):
        return np.array([h for h, _ in self.terms], dtype=np.float64)

    @property
    def lam(self):
        return float(np.abs(self.coefficients).sum())

    @property
    def words(self):
        return [decode(pauli) for _, pauli in self.terms]

    def with_terms(self, terms, energy_offset=None):
        offset = self.energy_offset if energy_offset is None else energy_offset
        return Hamiltonian(self.n_qubits, tuple(terms), offset)


@dataclass(frozen=True)
class HamiltonianSplit:
    """Terms ranked by |h| descending; the first n_deterministic are deterministic."""

    ranked: Hamiltonian
    n_deterministic: int

    @property
    def n_qubits(self):
        return self.ranked.n_qubits

    @property
    def deterministic(self):
        # Executed in lexicographic order; carries the identity offset
        terms = self.ranked.terms[: self.n_deterministic]
        return sort_for_execution(self.ranked.with_terms(terms))

    @property
    def randomized(self):
        return self.ranked.with_terms(self.ranked.terms[self.n_deterministic :], 0.0)

    @property
    def lam(self):
        return self.ranked.lam

    @property
    def lam_r(self):
        return self.randomized.lam

    @property
    def is_deterministic(self):
        return self.n_deterministic == len(self.ranked)


def from_terms(n_qubits, terms, energy_offset=0.0):
    """Merge duplicate strings and move identity terms into the offset."""
    merged = {}
    for h, pauli in terms:
        if pauli.n_qubits != n_qubits:
            raise ValueError(f"Term {pauli} is not on {n_qubits} qubits")
        if pauli.is_identity:
            energy_offset += h
        else:
            merged[pauli] = merged.get(pauli, 0.0) + h
    terms = tuple((h, pauli) for pauli, h in merged.items())
    return Hamiltonian(n_qubits, terms, energy_offset)


def parse(text):
    terms = []
    n_qubits = None
    for lineno, line in content_lines(text):
        coefficient, word = transform(line, TERM_TRANSFORMERS)
        try:
            h = float(coefficient)
        except ValueError:
            raise InputFormatError(
                f"line {lineno}: unparsable coefficient {coefficient!r}"
            ) from None
        if n_qubits is None:
            n_qubits = len(word)
        elif len(word) != n_qubits:
            raise InputFormatError(
                f"line {lineno}: word {word!r} has {len(word)} letters, "
                f"expected {n_qubits}"
            )
        try:
            terms.append((h, encode(word)))
        except ValueError as err:
            raise InputFormatError(f"line {lineno}: {err}") from None
    if n_qubits is None:
        raise InputFormatError("Hamiltonian has no terms")
    return from_terms(n_qubits, terms)


def read_hamiltonian(path):
    return parse(read_text(path))


def format_hamiltonian(hamiltonian):
    lines = []
    if hamiltonian.energy_offset:
        lines.append(f"{hamiltonian.energy_offset:.17g} {'I' * hamiltonian.n_qubits}")
    lines += [f"{h:.17g} {decode(pauli)}" for h, pauli in hamiltonian.terms]
    return "\n".join(lines) + "\n"


def sort_for_execution(hamiltonian):
    terms = sorted(hamiltonian.terms, key=lambda term: sort_key(term[1]))
    return hamiltonian.with_terms(terms)


def rank_by_magnitude(hamiltonian):
    terms = sorted(
        hamiltonian.terms, key=lambda term: (-abs(term[0]), sort_key(term[1]))
    )
    return hamiltonian.with_terms(terms)


def split_deterministic(hamiltonian, n_deterministic=None, lambda_r_fraction=None):
    if (n_deterministic is None) == (lambda_r_fraction is None):
        raise ValueError("Give exactly one of n_deterministic or lambda_r_fraction")
    ranked = rank_by_magnitude(hamiltonian)
    n_terms = len(ranked)

    if lambda_r_fraction is not None:
        if not 0.0 <= lambda_r_fraction <= 1.0:
            raise ValueError(
                f"lambda_R fraction must be in [0, 1]: {lambda_r_fraction}"
            )
        magnitudes = np.abs(ranked.coefficients)
        lam = magnitudes.sum()
        # lambda_R after keeping the first k terms, k = 0..L
        remainders = lam - np.concatenate([[0.0], np.cumsum(magnitudes)])
        target = lambda_r_fraction * lam + 1e-12 * lam
        n_deterministic = int(np.argmax(remainders <= target)) if n_terms else 0

    if not 0 <= n_deterministic <= n_terms:
        raise ValueError(f"L_det must be in 0..{n_terms}: {n_deterministic}")
    return HamiltonianSplit(ranked, n_deterministic)


def cost_model(l_d, lam_r, eps, delta, a=1.0, b=1.0):
    """C_tot = a L_D / (eps delta) + b lambda_R^2 / eps^2."""
    if eps <= 0 or delta <= 0:
        raise ValueError(f"eps and delta must be positive: eps={eps}, delta={delta}")
    return a * l_d / (eps * delta) + b * lam_r**2 / eps**2


def minimize_cost(hamiltonian, eps, cgs, a=1.0, b=1.0):
    """Scan L_det for the cheapest split with cgs * delta^2 <= eps.

    `cgs` is either a constant C_gs proxy or a callable of the split.
    Returns (split, delta, cost).
    """
    best = None
    for n_det in range(len(hamiltonian) + 1):
        split = split_deterministic(hamiltonian, n_deterministic=n_det)
        proxy = cgs(split) if callable(cgs) else cgs
        if proxy < 0:
            raise ValueError(f"C_gs proxy must be non-negative: {proxy}")
        # Largest step allowed by the Trotter error budget
        delta = math.sqrt(eps / proxy) if proxy > 0 else math.pi
        delta = min(delta, math.pi)
        cost = cost_model(n_det, split.lam_r, eps, delta, a, b)
        if best is None or cost < best[2]:
            best = (split, delta, cost)
    logger.info(f"minimize_cost: L_det={best[0].n_deterministic}, delta={best[1]:.4g}")
    return best


def group_stream(rotations, m, max_run=None):
    """Group consecutive rotations that share their upper-m-qubit suffix."""
    groups = []
    suffix = None
    members = []
    for pauli, phi in rotations:
        lower, upper = split_suffix(pauli, m)
        if upper != suffix or (max_run is not None and len(members) >= max_run):
            if members:
                groups.append(RotationGroup(suffix, tuple(members)))
            suffix = upper
            members = []
        members.append((lower, phi))
    if members:
        groups.append(RotationGroup(suffix, tuple(members)))
    return groups


def _sets_commute(terms_a, terms_b):
    return all(commutes(pa, pb) for _, pa in terms_a for _, pb in terms_b)


def cgs_bound_general(partition):
    """4 sum_a |H_a| (sum_{b: [H_a, H_b] != 0} |H_b|)^2, with |H| <= sum |h|."""
    if not partition:
        raise ValueError("Empty partition")
    norms = [sum(abs(h) for h, _ in terms) for terms in partition]
    total = 0.0
    for alpha, terms_a in enumerate(partition):
        partners = sum(
            norms[beta]
            for beta, terms_b in enumerate(partition)
            if beta != alpha and not _sets_commute(terms_a, terms_b)
        )
        total += norms[alpha] * partners**2
    return 4.0 * total


def cgs_bound_partial(split):
    # Deterministic terms are assumed to fully anticommute with H_R
    terms = split.ranked.terms[: split.n_deterministic]
    total = 0.0
    for h_l, p_l in terms:
        partners = sum(abs(h_k) for h_k, p_k in terms if not commutes(p_l, p_k))
        total += abs(h_l) * partners**2
    lam, lam_r = split.lam, split.lam_r
    lam_d = lam - lam_r
    return 4.0 * total + lam_r * lam_d**2 + lam_d * lam_r**2


def bound_report(split):
    lam = split.lam
    row = {
        "n": split.n_qubits,
        "L": len(split.ranked),
        "L_det": split.n_deterministic,
        "lambda": lam,
        "lambda_R": split.lam_r,
        "lambda_R_frac": split.lam_r / lam if lam else 0.0,
        "cgs_bound": cgs_bound_partial(split),
    }
    return pd.DataFrame([row])
