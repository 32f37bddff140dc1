"""Timing of grouped rotation workloads on random states."""

import logging
import time

import numpy as np
import pandas as pd
import scipy.stats

from common_lib import timer
from fabric_lib import create_fabric
from formulas_lib import RotationStream, execute
from pauli_lib import PauliString, join_suffix
from state_lib import random_state

logger = logging.getLogger(__name__)

BENCH_REPEATS = 10
BENCH_LENGTHS = (1, 10, 100)
BENCH_COLUMNS = ["n", "m", "L", "grouped", "ms_per_rotation", "exchanges"]


def random_pauli(n, rng):
    p1 = int(rng.integers(0, 1 << n)) if n else 0
    p2 = int(rng.integers(0, 1 << n)) if n else 0
    return PauliString(n, p1, p2)


def shared_suffix_stream(n, m, length, rng):
    """`length` random rotations whose upper m factors are one non-diagonal suffix."""
    if m == 0:
        suffix = PauliString(0)
    else:
        suffix = random_pauli(m, rng)
        while suffix.is_diagonal:
            suffix = random_pauli(m, rng)
    angles = rng.uniform(-np.pi, np.pi, size=length)
    rotations = tuple(
        (join_suffix(random_pauli(n - m, rng), suffix), float(phi)) for phi in angles
    )
    return RotationStream(rotations)


def time_group(n, m, length, grouped, repeats=BENCH_REPEATS, seed=0, jobs=1):
    """Mean per-rotation time of one group over `repeats` timed applications."""
    rng = np.random.default_rng(seed)
    stream = shared_suffix_stream(n, m, length, rng)
    fabric = create_fabric(n, m, random_state(n, rng), jobs=jobs)
    elapsed = []
    with fabric:
        for _ in range(repeats):
            t1 = time.perf_counter()
            execute(fabric, stream, grouped=grouped)
            elapsed.append(time.perf_counter() - t1)
        exchanges = fabric.counters.exchanges // repeats
    return {
        "n": n,
        "m": m,
        "L": length,
        "grouped": grouped,
        "ms_per_rotation": 1e3 * float(np.mean(elapsed)) / length,
        "exchanges": exchanges,
    }


@timer
def bench_table(n, m, lengths=BENCH_LENGTHS, repeats=BENCH_REPEATS, seed=0, jobs=1):
    rows = []
    for idx, length in enumerate(lengths):
        logger.info(f"L={length}: {idx + 1} of {len(lengths)}")
        for grouped in (True, False):
            rows.append(time_group(n, m, length, grouped, repeats, seed, jobs))
    df = pd.DataFrame(rows, columns=BENCH_COLUMNS)
    df.attrs["name"] = "bench"
    df.attrs["title"] = f"n={n}, {1 << m} workers"
    return df


@timer
def weak_scaling(qubits, length=10, repeats=BENCH_REPEATS, seed=0):
    """Single-worker rotations per second against n, with the log-log slope.

    Throughput of a memory-bound kernel falls as 1/2^n, so the slope of
    log2(rate) against n is close to -1.
    """
    rows = []
    for n in qubits:
        row = time_group(n, 0, length, True, repeats, seed)
        rows.append({"n": n, "rotations_per_s": 1e3 / row["ms_per_rotation"]})
    df = pd.DataFrame(rows)
    fit = scipy.stats.linregress(df["n"], np.log2(df["rotations_per_s"]))
    df.attrs["name"] = "scaling"
    df.attrs["slope"] = float(fit.slope)
    return df
