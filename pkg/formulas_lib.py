"""Product-formula rotation streams.

A stream lists rotations in operator-product order: entry 0 is the leftmost
factor and acts on the state last.
"""

import math
import re
from dataclasses import dataclass, field

import numpy as np

from common_lib import content_lines, transform
from hamiltonian_lib import group_stream
from pauli_lib import decode, encode

DEFAULT_KAPPA_SCALE = 0.2 * math.pi

STREAM_TRANSFORMERS = [
    (re.compile(r"^(\S+)\s+([IXYZ]+)$"), (1, 2)),
]


@dataclass(frozen=True)
class RotationStream:
    rotations: tuple
    delta: float = 0.0
    steps: int = 1
    order: int = 2
    samples: int = 0
    n_sampled: int = 0
    seed: object = field(default=None, compare=False)

    def __len__(self):
        return len(self.rotations)

    def __iter__(self):
        return iter(self.rotations)


class CounterRng:
    """Counter-based Philox streams keyed by (seed, key).

    The generator for (step, stage) depends only on those counters, never on
    the order in which streams are requested or on the worker count. Philox
    advances counter word 0 as it draws, so (step, stage) sit in the top words
    where no stream can run into its neighbour.
    """

    def __init__(self, seed, key=0):
        self.seed = int(seed)
        self.key = int(key)

    def generator(self, step, stage):
        bit_generator = np.random.Philox(
            key=[self.seed, self.key], counter=[0, 0, stage, step]
        )
        return np.random.Generator(bit_generator)


def trotter1_step(hamiltonian, delta):
    rotations = tuple((pauli, delta * h) for h, pauli in hamiltonian.terms)
    return RotationStream(rotations, delta=delta, order=1)


def trotter2_step(hamiltonian, delta):
    forward = tuple((pauli, 0.5 * delta * h) for h, pauli in hamiltonian.terms)
    return RotationStream(forward + forward[::-1], delta=delta, order=2)


def step_stream(hamiltonian, delta, order=2):
    if order == 1:
        return trotter1_step(hamiltonian, delta)
    if order == 2:
        return trotter2_step(hamiltonian, delta)
    raise ValueError(f"Only first and second order formulas are supported: {order}")


def qdrift_stage(randomized, t_stage, r, rng):
    """r samples with P(l) = |h_l|/lambda_R, each rotating by sign(h_l) lambda_R t/r."""
    if r < 0:
        raise ValueError(f"Sample count must be non-negative: {r}")
    if r == 0:
        return RotationStream((), delta=t_stage)
    if len(randomized) == 0:
        raise ValueError(f"Cannot draw {r} samples from an empty randomized part")

    magnitudes = np.abs(randomized.coefficients)
    lam_r = magnitudes.sum()
    picks = rng.choice(len(magnitudes), size=r, p=magnitudes / lam_r)
    angle = lam_r * t_stage / r
    rotations = tuple(
        (randomized.terms[l][1], math.copysign(angle, randomized.terms[l][0]))
        for l in picks
    )
    return RotationStream(rotations, delta=t_stage, samples=r, n_sampled=r)


def partially_randomized_step(split, delta, r, rng, step=0):
    """D forward at delta/2, two fresh qDRIFT stages at delta/2, D reversed."""
    randomized = split.randomized
    if len(randomized) and r == 0:
        raise ValueError("Randomized part is non-empty but r = 0")
    half = trotter2_step(split.deterministic, delta).rotations
    forward, backward = half[: len(half) // 2], half[len(half) // 2 :]
    first = qdrift_stage(randomized, 0.5 * delta, r, rng.generator(step, 0))
    second = qdrift_stage(randomized, 0.5 * delta, r, rng.generator(step, 1))
    rotations = forward + first.rotations + second.rotations + backward
    return RotationStream(
        rotations,
        delta=delta,
        order=2,
        samples=r if len(randomized) else 0,
        n_sampled=first.n_sampled + second.n_sampled,
        seed=(rng.seed, rng.key),
    )


def evolution_stream(split, delta, steps, r, rng):
    if steps < 1:
        raise ValueError(f"steps must be >= 1: {steps}")
    parts = [
        partially_randomized_step(split, delta, r, rng, step=step)
        for step in range(steps)
    ]
    return RotationStream(
        tuple(rotation for part in parts for rotation in part.rotations),
        delta=delta,
        steps=steps,
        order=2,
        samples=parts[0].samples,
        n_sampled=sum(part.n_sampled for part in parts),
        seed=parts[0].seed,
    )


def sample_count(lam_r, delta, max_round, kappa=None, reduction=1.0):
    """r = ceil(f kappa lambda_R^2 delta^2 2^M), kappa = delta / (0.2 pi) by default."""
    if delta <= 0:
        raise ValueError(f"delta must be positive: {delta}")
    if max_round < 0:
        raise ValueError(f"max_round must be >= 0: {max_round}")
    if not 0.0 < reduction <= 1.0:
        raise ValueError(f"Sample reduction factor must be in (0, 1]: {reduction}")
    if kappa is None:
        kappa = delta / DEFAULT_KAPPA_SCALE
    return math.ceil(reduction * kappa * lam_r**2 * delta**2 * 2**max_round)


def execute(fabric, stream, grouped=True, repeat=1):
    """Apply a stream `repeat` times to the fabric; the last group acts first."""
    groups = group_stream(stream, fabric.m, max_run=None if grouped else 1)
    for _ in range(repeat):
        for group in reversed(groups):
            fabric.apply_group(group)
    return len(groups)


def format_stream(stream):
    return "".join(f"{phi:.17g} {decode(pauli)}\n" for pauli, phi in stream)


def parse_stream(text):
    rotations = []
    for _, line in content_lines(text):
        phi, word = transform(line, STREAM_TRANSFORMERS)
        rotations.append((encode(word), float(phi)))
    return RotationStream(tuple(rotations))
