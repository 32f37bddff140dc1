"""Time signals Z_m, phase estimation, Trotter errors and power-law fits."""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import pandas as pd
import scipy.stats

from common_lib import NORM_DRIFT_GUARD, NumericalGuardError, timer
from formulas_lib import (
    CounterRng,
    evolution_stream,
    execute,
    partially_randomized_step,
)

logger = logging.getLogger(__name__)

NOISE_FLOOR = 0.05
CONVERGENCE_TOL = 0.05
DEFAULT_REPEATS = 3
SIGNAL_COLUMNS = [
    "m",
    "delta",
    "re_z",
    "im_z",
    "abs_z",
    "r",
    "repeats",
    "rotations",
    "exchanges",
    "wall_ms",
]


@dataclass(frozen=True)
class SignalRecord:
    m: int
    delta: float
    z: complex
    r: int
    repeats: int
    rotations: int
    exchanges: int
    wall_ms: float


@dataclass(frozen=True)
class PhaseEstimate:
    energy: float
    round_energies: tuple
    converged: bool


@dataclass(frozen=True)
class TrotterFit:
    c_gs: float
    a: float
    residual: float
    points: tuple


def _guard(z, tolerance=NORM_DRIFT_GUARD):
    if abs(z) > 1.0 + tolerance:
        raise NumericalGuardError(f"|Z| = {abs(z):.12f} exceeds 1")
    return z


def _overlap(fabric, psi0, offset_phase):
    fabric.check_norm()
    return fabric.global_inner_product(psi0) * offset_phase


def signal(fabric_factory, psi0, split, delta, m, r, seed, repeats=1, grouped=True):
    """Z_m = <psi0| U(delta)^(2^m) |psi0>, averaged over independent circuit runs.

    Each repeat draws its samples from a counter-based generator keyed by
    (seed, m, repeat) and evolves a fresh fabric built by `fabric_factory`.
    """
    if repeats < 1:
        raise ValueError(f"repeats must be >= 1: {repeats}")
    steps = 1 << m
    offset_phase = np.exp(1j * split.ranked.energy_offset * delta * steps)

    t1 = time.perf_counter()
    values = []
    rotations = exchanges = 0
    for repeat in range(repeats):
        rng = CounterRng(seed, key=(m << 32) | repeat)
        with fabric_factory(psi0) as fabric:
            if delta != 0:
                stream = evolution_stream(split, delta, steps, r, rng)
                execute(fabric, stream, grouped=grouped)
            values.append(_overlap(fabric, psi0, offset_phase))
            rotations += fabric.counters.rotations
            exchanges += fabric.counters.exchanges

    z = _guard(complex(np.mean(values)))
    wall_ms = (time.perf_counter() - t1) * 1e3
    return SignalRecord(m, delta, z, r, repeats, rotations, exchanges, wall_ms)


def _deterministic_series(fabric_factory, psi0, split, delta, max_round, grouped):
    # The step unitary is fixed, so U^(2^m) continues from U^(2^(m-1))
    stream = partially_randomized_step(split, delta, 0, CounterRng(0))
    records = []
    with fabric_factory(psi0) as fabric:
        for m in range(max_round + 1):
            t1 = time.perf_counter()
            if delta != 0:
                repeat = 1 if m == 0 else 1 << (m - 1)
                execute(fabric, stream, grouped=grouped, repeat=repeat)
            offset_phase = np.exp(1j * split.ranked.energy_offset * delta * (1 << m))
            z = _guard(_overlap(fabric, psi0, offset_phase))
            wall_ms = (time.perf_counter() - t1) * 1e3
            records.append(
                SignalRecord(
                    m,
                    delta,
                    z,
                    0,
                    1,
                    fabric.counters.rotations,
                    fabric.counters.exchanges,
                    wall_ms,
                )
            )
    return records


@timer
def signal_series(
    fabric_factory,
    psi0,
    split,
    delta,
    max_round,
    r,
    seed,
    repeats=DEFAULT_REPEATS,
    grouped=True,
):
    """Signals for rounds 0..max_round."""
    if split.is_deterministic:
        return _deterministic_series(
            fabric_factory, psi0, split, delta, max_round, grouped
        )
    records = []
    for m in range(max_round + 1):
        logger.info(f"delta={delta:g}: round {m} of {max_round}")
        records.append(
            signal(fabric_factory, psi0, split, delta, m, r, seed, repeats, grouped)
        )
    return records


def wrap_phase(theta):
    """Map onto the principal interval (-pi, pi]."""
    return math.pi - (math.pi - theta) % (2 * math.pi)


def resolution(delta, max_round):
    return math.pi / (abs(delta) * 2 ** (max_round + 1))


def rpe_estimate(zs, delta, noise_floor=NOISE_FLOOR):
    """Refine theta round by round from Z_m ~ exp(i 2^m theta); energy = theta/delta.

    Round m picks, among the 2^m candidate phases consistent with arg Z_m, the
    one nearest the previous estimate. A round whose amplitude is below the
    noise floor stops the refinement and marks the estimate unconverged.
    """
    zs = list(zs)
    if not zs:
        raise ValueError("No signal rounds given")
    if delta == 0:
        raise ValueError("delta must be non-zero")
    if abs(zs[0]) < noise_floor:
        return PhaseEstimate(math.nan, (), False)

    theta = float(np.angle(zs[0]))
    energies = [wrap_phase(theta) / delta]
    converged = True
    for m, z in enumerate(zs[1:], start=1):
        if abs(z) < noise_floor:
            logger.warning(f"round {m}: |Z| = {abs(z):.3g} below noise floor")
            converged = False
            break
        scale = 2**m
        base = float(np.angle(z))
        j = round((scale * theta - base) / (2 * math.pi))
        theta = (base + 2 * math.pi * j) / scale
        energies.append(wrap_phase(theta) / delta)
    return PhaseEstimate(energies[-1], tuple(energies), converged)


def trotter_error(energy, e_ref):
    return abs(energy - e_ref)


def convergence_check(errors, tol=CONVERGENCE_TOL, atol=0.0):
    if len(errors) < 2:
        return False
    last, previous = errors[-1], errors[-2]
    return abs(last - previous) <= max(tol * abs(last), atol)


def fit_power_law(points):
    """Least-squares line through (log delta, log eps): eps = C_gs delta^a."""
    points = tuple((float(d), float(e)) for d, e in points)
    if len(points) < 3:
        raise ValueError(f"Need at least 3 points for a fit: {len(points)}")
    deltas = np.array([d for d, _ in points])
    errors = np.array([e for _, e in points])
    if (deltas <= 0).any() or (errors <= 0).any():
        raise ValueError("Power-law fit needs positive step sizes and errors")
    if len(np.unique(deltas)) != len(deltas):
        raise ValueError("Step sizes must be distinct")

    x, y = np.log(deltas), np.log(errors)
    fit = scipy.stats.linregress(x, y)
    residual = float(np.sqrt(np.mean((y - (fit.intercept + fit.slope * x)) ** 2)))
    return TrotterFit(float(np.exp(fit.intercept)), float(fit.slope), residual, points)


def run_cells(cells, jobs=1):
    """Run independent keyed cells (key -> zero-argument callable).

    Results come back as a dict in sorted key order whatever the completion
    order.
    """
    keys = sorted(cells)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda key: cells[key](), keys))
    else:
        results = [cells[key]() for key in keys]
    return dict(zip(keys, results))


def signal_frame(records, title=""):
    df = pd.DataFrame(
        [
            (
                rec.m,
                rec.delta,
                rec.z.real,
                rec.z.imag,
                abs(rec.z),
                rec.r,
                rec.repeats,
                rec.rotations,
                rec.exchanges,
                rec.wall_ms,
            )
            for rec in records
        ],
        columns=SIGNAL_COLUMNS,
    )
    df.attrs["name"] = "signals"
    df.attrs["title"] = title
    return df


def fit_footer(fit, c_gs_bound):
    """Footer row of the fit report; NaN fit values when the fit was rejected."""
    footer = {
        "c_gs": fit.c_gs if fit else math.nan,
        "a": fit.a if fit else math.nan,
        "residual": fit.residual if fit else math.nan,
        "c_gs_bound": c_gs_bound,
        "bound_dominates": bool(fit is not None and fit.c_gs <= c_gs_bound),
    }
    return pd.DataFrame([footer])


def reduction_study(
    fabric_factory,
    psi0,
    split,
    delta,
    max_round,
    r_full,
    factors,
    seed,
    repeats=DEFAULT_REPEATS,
    noise_floor=NOISE_FLOOR,
):
    """Energy estimates and |Z_M| when the sample count is reduced by each factor."""
    rows = []
    for factor in factors:
        r = max(1, math.ceil(factor * r_full))
        records = signal_series(
            fabric_factory, psi0, split, delta, max_round, r, seed, repeats
        )
        estimate = rpe_estimate([rec.z for rec in records], delta, noise_floor)
        rows.append(
            {
                "factor": factor,
                "r": r,
                "energy": estimate.energy,
                "converged": estimate.converged,
                "abs_z_max_round": abs(records[-1].z),
            }
        )
    return pd.DataFrame(rows)
