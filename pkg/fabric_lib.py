"""Partitioned state: 2**m workers, each owning a partition and a mirror buffer.

Amplitude i + k * 2**(n-m) of the global state lives at position i of the
partition owned by worker k, so the upper m qubits select the worker.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from common_lib import (
    GATHER_MAX_QUBITS,
    MAX_QUBITS,
    NORM_DRIFT_GUARD,
    NORM_TOLERANCE,
    NumericalGuardError,
)
from pauli_lib import apply_to_basis
from state_lib import (
    apply_rotation_sequence,
    basis_state,
    butterfly,
    inner_product,
    norm2,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RotationGroup:
    suffix: object
    members: tuple

    def __len__(self):
        return len(self.members)


@dataclass(frozen=True)
class ExchangePlan:
    partners: tuple
    phases: tuple

    @property
    def is_local(self):
        return all(k == partner for k, partner in enumerate(self.partners))


@dataclass
class Counters:
    exchanges: int = 0
    rotations: int = 0
    groups: int = 0
    wall_ms: float = 0.0
    last_group_ms: float = 0.0


class Worker:
    def __init__(self, rank, partition):
        self.rank = rank
        self.partition = partition
        self.buffer = np.zeros_like(partition)


def plan_exchange(suffix):
    """Partner k' and phase omega_k with Q|k> = omega_k |k'>, for every worker k."""
    pairs = [apply_to_basis(suffix, k) for k in range(1 << suffix.n_qubits)]
    partners = tuple(partner for partner, _ in pairs)
    phases = tuple(phase for _, phase in pairs)
    return ExchangePlan(partners, phases)


class Fabric:
    def __init__(self, n, m, workers, jobs=1):
        self.n = n
        self.m = m
        self.workers = workers
        self.counters = Counters()
        self._pool = ThreadPoolExecutor(max_workers=jobs) if jobs > 1 else None

    @property
    def n_workers(self):
        return len(self.workers)

    @property
    def local_qubits(self):
        return self.n - self.m

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _run(self, func):
        # Each call is a rendezvous: every worker finishes before it returns
        if self._pool is None:
            for worker in self.workers:
                func(worker)
        else:
            list(self._pool.map(func, self.workers))

    def apply_group(self, group, force_exchange=False):
        """Apply prod_l exp(i phi_l P_l ⊗ Q) with at most one pairwise exchange."""
        if group.suffix.n_qubits != self.m:
            raise ValueError(
                f"Group suffix on {group.suffix.n_qubits} qubits, fabric has m={self.m}"
            )
        for lower, _ in group.members:
            if lower.n_qubits != self.local_qubits:
                raise ValueError(
                    f"Member on {lower.n_qubits} qubits, partitions hold "
                    f"{self.local_qubits}"
                )

        t1 = time.perf_counter()
        plan = plan_exchange(group.suffix)
        members = group.members

        if group.suffix.is_diagonal and not force_exchange:
            # Q|k> = ±|k>: partition k only sees one of the two branches
            def rotate_local(worker):
                sign = 1 if plan.phases[worker.rank].exponent == 0 else -1
                apply_rotation_sequence(worker.partition, members, sign)

            self._run(rotate_local)
        else:

            def receive(worker):
                partner = self.workers[plan.partners[worker.rank]]
                phase = plan.phases[worker.rank].conjugate().value
                np.multiply(partner.partition, phase, out=worker.buffer)

            def combine(worker):
                butterfly(worker.partition, worker.buffer)
                apply_rotation_sequence(worker.partition, members, 1)
                apply_rotation_sequence(worker.buffer, members, -1)
                butterfly(worker.partition, worker.buffer)

            self._run(receive)
            self._run(combine)
            self.counters.exchanges += 1

        elapsed = (time.perf_counter() - t1) * 1e3
        self.counters.rotations += len(members)
        self.counters.groups += 1
        self.counters.wall_ms += elapsed
        self.counters.last_group_ms = elapsed

    def gather(self, max_qubits=GATHER_MAX_QUBITS):
        if self.n > max_qubits:
            raise ValueError(f"gather is limited to {max_qubits} qubits: n={self.n}")
        return np.concatenate([worker.partition for worker in self.workers])

    def global_inner_product(self, reference):
        reference = np.asarray(reference)
        if reference.shape != (1 << self.n,):
            raise ValueError(
                f"Reference of shape {reference.shape} for {self.n} qubits"
            )
        size = 1 << self.local_qubits
        return sum(
            inner_product(reference[k * size : (k + 1) * size], worker.partition)
            for k, worker in enumerate(self.workers)
        )

    def global_norm2(self):
        return sum(norm2(worker.partition) for worker in self.workers)

    def check_norm(self, tolerance=NORM_DRIFT_GUARD):
        drift = abs(self.global_norm2() - 1.0)
        if drift > tolerance:
            raise NumericalGuardError(f"Norm drifted by {drift:.3e}")
        return drift


def create_fabric(
    n,
    m,
    initial=0,
    renormalize=False,
    jobs=1,
    max_qubits=MAX_QUBITS,
    tolerance=NORM_TOLERANCE,
):
    """Partition an initial state (basis index or amplitude array) over 2**m workers."""
    if not 1 <= n <= max_qubits:
        raise ValueError(f"n must be in 1..{max_qubits}: {n}")
    if not 0 <= m < n:
        raise ValueError(f"Worker count 2**{m} needs 0 <= m < n={n}")

    if isinstance(initial, (int, np.integer)):
        state = basis_state(n, int(initial))
    else:
        state = np.array(initial, dtype=np.complex128)
        if state.shape != (1 << n,):
            raise ValueError(f"Initial state of shape {state.shape} for {n} qubits")
        norm = norm2(state)
        if renormalize:
            state /= np.sqrt(norm)
        elif abs(norm - 1.0) > tolerance:
            raise ValueError(f"Initial state is not normalized: |psi|^2 = {norm}")

    partitions = state.reshape(1 << m, 1 << (n - m))
    workers = [Worker(k, partitions[k].copy()) for k in range(1 << m)]
    logger.debug(f"fabric n={n} m={m}: {len(workers)} workers")
    return Fabric(n, m, workers, jobs=jobs)
