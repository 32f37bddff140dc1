import functools
import math

import numpy as np
import pytest
from conftest import ising_chain

from common_lib import NumericalGuardError
from fabric_lib import create_fabric
from hamiltonian_lib import cgs_bound_partial, from_terms, parse, split_deterministic
from oracle_lib import effective_ground_energy, exact_evolution, ground_state
from pauli_lib import encode
from rpe_lib import (
    SIGNAL_COLUMNS,
    _guard,
    convergence_check,
    fit_footer,
    fit_power_law,
    reduction_study,
    resolution,
    rpe_estimate,
    run_cells,
    signal,
    signal_frame,
    signal_series,
    trotter_error,
    wrap_phase,
)
from state_lib import basis_state, random_state

DELTAS = (0.1, 0.2, 0.4)


def factory(n, m=0):
    return functools.partial(create_fabric, n, m)


def synthetic(phi, max_round):
    return [np.exp(1j * phi * 2**m) for m in range(max_round + 1)]


class TestSignal:
    def test_eigenstate(self):
        h = parse("0.7 Z")
        split = split_deterministic(h, n_deterministic=1)
        psi0 = basis_state(1, 1)
        for m in range(4):
            rec = signal(factory(1), psi0, split, 0.3, m, 0, seed=0)
            assert rec.z == pytest.approx(np.exp(-1j * 0.3 * 0.7 * 2**m), abs=1e-12)
            assert abs(rec.z) == pytest.approx(1.0, abs=1e-12)

    def test_zero_step(self, two_term, psi):
        split = split_deterministic(two_term, n_deterministic=1)
        rec = signal(factory(1), psi(1), split, 0.0, 3, 5, seed=0)
        assert rec.z == pytest.approx(1.0)
        assert rec.rotations == 0

    def test_commuting_terms(self):
        h = parse("0.3 ZI\n0.2 IZ")
        split = split_deterministic(h, n_deterministic=2)
        rec = signal(factory(2, 1), basis_state(2, 3), split, 0.25, 2, 0, seed=0)
        assert rec.z == pytest.approx(np.exp(-1j * 0.25 * 0.5 * 4), abs=1e-12)

    def test_offset_enters_phase(self):
        h = parse("0.4 I\n0.7 Z")
        split = split_deterministic(h, n_deterministic=1)
        rec = signal(factory(1), basis_state(1, 0), split, 0.2, 1, 0, seed=0)
        assert rec.z == pytest.approx(np.exp(1j * 0.2 * 1.1 * 2), abs=1e-12)

    def test_single_term_randomized_is_exact(self, psi):
        h = parse("0.6 XZ")
        split = split_deterministic(h, n_deterministic=0)
        psi0 = psi(2)
        rec = signal(factory(2, 1), psi0, split, 0.3, 2, 9, seed=4)
        exact = np.vdot(psi0, exact_evolution(h, 0.3 * 4, psi0))
        assert rec.z == pytest.approx(exact, abs=1e-12)

    def test_worker_count_invariance(self, rng):
        h = ising_chain(4, 0.5, 0.3, 0.2)
        split = split_deterministic(h, n_deterministic=3)
        psi0 = random_state(4, rng)
        zs = [
            signal(factory(4, m), psi0, split, 0.2, 2, 6, seed=11, repeats=2).z
            for m in range(4)
        ]
        for z in zs[1:]:
            assert z == pytest.approx(zs[0], abs=1e-12)

    def test_counters(self, two_term):
        split = split_deterministic(two_term, n_deterministic=2)
        rec = signal(factory(1), basis_state(1, 0), split, 0.1, 2, 0, seed=0)
        assert rec.rotations == 4 * 4
        assert rec.exchanges == 0
        assert rec.repeats == 1

    def test_norm_guard(self, two_term):
        def broken(psi0):
            fabric = create_fabric(1, 0, psi0)
            fabric.workers[0].partition *= 1.01
            return fabric

        split = split_deterministic(two_term, n_deterministic=2)
        with pytest.raises(NumericalGuardError):
            signal(broken, basis_state(1, 0), split, 0.1, 0, 0, seed=0)

    def test_guard(self):
        assert _guard(1.0 + 1e-12) == 1.0 + 1e-12
        with pytest.raises(NumericalGuardError):
            _guard(1.0 + 1e-6)

    @pytest.mark.parametrize("m", range(4))
    def test_negative_step_conjugates(self, rng, m):
        h = parse("0.25 III\n0.5 XXI\n-0.3 ZIZ\n0.2 IYX\n0.1 ZZZ")
        split = split_deterministic(h, n_deterministic=len(h))
        psi0 = random_state(3, rng)
        forward = signal(factory(3, 1), psi0, split, 0.3, m, 0, seed=0)
        backward = signal(factory(3, 1), psi0, split, -0.3, m, 0, seed=0)
        assert backward.z == pytest.approx(np.conj(forward.z), abs=1e-12)
        assert abs(forward.z.imag) > 1e-3

    def test_rejects_repeats(self, two_term):
        split = split_deterministic(two_term, n_deterministic=2)
        with pytest.raises(ValueError):
            signal(factory(1), basis_state(1, 0), split, 0.1, 0, 0, seed=0, repeats=0)


class TestSignalSeries:
    def test_deterministic_reuse_matches_fresh_runs(self, rng):
        h = ising_chain(3, 0.4, 0.6)
        split = split_deterministic(h, n_deterministic=len(h))
        psi0 = random_state(3, rng)
        series = signal_series(factory(3, 1), psi0, split, 0.3, 4, 0, seed=0)
        assert [rec.m for rec in series] == list(range(5))
        for rec in series:
            fresh = signal(factory(3, 1), psi0, split, 0.3, rec.m, 0, seed=0)
            assert rec.z == pytest.approx(fresh.z, abs=1e-12)

    def test_randomized_rounds(self, rng):
        h = ising_chain(3, 0.4, 0.6)
        split = split_deterministic(h, n_deterministic=2)
        psi0 = random_state(3, rng)
        series = signal_series(factory(3), psi0, split, 0.2, 2, 3, seed=1, repeats=2)
        assert [rec.r for rec in series] == [3, 3, 3]
        assert all(rec.repeats == 2 for rec in series)

    def test_frame(self, two_term):
        split = split_deterministic(two_term, n_deterministic=2)
        series = signal_series(factory(1), basis_state(1, 0), split, 0.1, 2, 0, 0)
        df = signal_frame(series, title="two terms")
        assert list(df.columns) == SIGNAL_COLUMNS
        assert len(df) == 3
        assert df.attrs["title"] == "two terms"
        np.testing.assert_allclose(df["abs_z"], np.hypot(df["re_z"], df["im_z"]))


class TestEstimate:
    """Phase doubling on noiseless synthetic signals."""

    def test_known_phase(self):
        estimate = rpe_estimate(synthetic(0.3, 10), 1.0)
        assert abs(estimate.energy - 0.3) <= math.pi / 2**11
        assert estimate.converged
        assert len(estimate.round_energies) == 11

    def test_zero_phase(self):
        assert rpe_estimate(synthetic(0.0, 6), 0.5).energy == 0.0

    def test_near_branch_cut(self):
        phi = math.pi - 0.01
        assert rpe_estimate(synthetic(phi, 8), 1.0).energy == pytest.approx(phi)

    @pytest.mark.parametrize("max_round", [0, 4, 8, 12])
    def test_precision(self, rng, max_round):
        for _ in range(20):
            phi = float(rng.uniform(-math.pi + 1e-6, math.pi))
            delta = float(rng.uniform(0.05, 1.0))
            energy = rpe_estimate(synthetic(phi, max_round), delta).energy
            assert abs(energy - phi / delta) <= resolution(delta, max_round)

    def test_noise_floor(self):
        zs = synthetic(0.3, 4)
        zs[3] *= 0.01
        estimate = rpe_estimate(zs, 1.0)
        assert not estimate.converged
        assert len(estimate.round_energies) == 3
        assert math.isnan(rpe_estimate([0.01], 1.0).energy)

    def test_rejects(self):
        with pytest.raises(ValueError):
            rpe_estimate([], 1.0)
        with pytest.raises(ValueError):
            rpe_estimate([1.0], 0.0)

    def test_wrap_phase(self):
        assert wrap_phase(math.pi) == pytest.approx(math.pi)
        assert wrap_phase(-math.pi) == pytest.approx(math.pi)
        assert wrap_phase(3 * math.pi / 2) == pytest.approx(-math.pi / 2)


class TestErrors:
    def test_trotter_error(self):
        assert trotter_error(-1.25, -1.25) == 0
        assert trotter_error(-1.0, -1.25) == pytest.approx(0.25)

    def test_convergence(self):
        errors = [1.0, 0.6, 0.52, 0.515]
        assert convergence_check(errors, tol=0.05)
        assert not convergence_check(errors[:3], tol=0.05)
        assert not convergence_check(errors[:1])

    def test_exact_evolution_signal(self, two_term):
        e0 = ground_state(two_term)
        delta = 0.25
        zs = [
            np.vdot(e0.vector, exact_evolution(two_term, delta * 2**m, e0.vector))
            for m in range(9)
        ]
        energy = rpe_estimate(zs, delta).energy
        assert trotter_error(energy, e0.energy) <= resolution(delta, 8)


class TestFit:
    def test_exact_power_law(self):
        fit = fit_power_law([(d, 3 * d**2) for d in DELTAS])
        assert fit.c_gs == pytest.approx(3, abs=1e-10)
        assert fit.a == pytest.approx(2, abs=1e-10)
        assert fit.residual == pytest.approx(0, abs=1e-12)

    def test_constant(self):
        fit = fit_power_law([(d, 0.01) for d in DELTAS])
        assert fit.a == pytest.approx(0, abs=1e-12)

    @pytest.mark.parametrize(
        "points",
        [
            [(0.1, 1.0), (0.2, 2.0)],
            [(0.1, 1.0), (0.2, 0.0), (0.3, 1.0)],
            [(0.1, 1.0)] * 3,
        ],
    )
    def test_rejects(self, points):
        with pytest.raises(ValueError):
            fit_power_law(points)

    def test_footer(self):
        fit = fit_power_law([(d, 3 * d**2) for d in DELTAS])
        footer = fit_footer(fit, 10.0).iloc[0]
        assert footer["bound_dominates"]
        rejected = fit_footer(None, 10.0).iloc[0]
        assert math.isnan(rejected["c_gs"])
        assert not rejected["bound_dominates"]


class TestTrotterOrder:
    """Trotter error prefactors from signals against the effective Hamiltonian."""

    @pytest.mark.parametrize(
        "hamiltonian",
        [
            ising_chain(4, 0.2, 0.3),
            ising_chain(5, 0.3, 0.25, 0.15),
            ising_chain(6, 0.15, 0.25),
        ],
        ids=["ising4", "ising5_longitudinal", "ising6"],
    )
    def test_second_order_fit(self, hamiltonian):
        split = split_deterministic(hamiltonian, n_deterministic=len(hamiltonian))
        ground = ground_state(hamiltonian)
        points = []
        for delta in DELTAS:
            records = signal_series(
                factory(hamiltonian.n_qubits, 1), ground.vector, split, delta, 6, 0, 0
            )
            estimate = rpe_estimate([rec.z for rec in records], delta)
            assert estimate.converged
            points.append((delta, trotter_error(estimate.energy, ground.energy)))
        fit = fit_power_law(points)
        assert 1.8 <= fit.a <= 2.3

        oracle = fit_power_law(
            [
                (delta, abs(effective_ground_energy(split, delta) - ground.energy))
                for delta in DELTAS
            ]
        )
        assert fit.c_gs == pytest.approx(oracle.c_gs, rel=0.2)
        assert fit.c_gs <= cgs_bound_partial(split)


class TestQdriftStatistics:
    def test_mean_signal_matches_exact_evolution(self, rng):
        h = from_terms(
            3,
            [
                (0.3, encode("XXI")),
                (-0.3, encode("IZY")),
                (0.35, encode("ZIX")),
                (0.25, encode("YYZ")),
            ],
        )
        split = split_deterministic(h, n_deterministic=0)
        psi0 = random_state(3, rng)
        delta = 0.2
        zs = np.array(
            [
                signal(factory(3, 1), psi0, split, delta, 0, 50, seed=seed).z
                for seed in range(200)
            ]
        )
        exact = np.vdot(psi0, exact_evolution(h, delta, psi0))
        standard_error = np.sqrt((zs.real.var() + zs.imag.var()) / len(zs))
        assert abs(zs.mean() - exact) <= 3 * standard_error


def test_run_cells_keyed_order():
    cells = {(2, 0): lambda: "late", (1, 5): lambda: "early", (1, 0): lambda: "first"}
    for jobs in (1, 3):
        results = run_cells(cells, jobs)
        assert list(results) == [(1, 0), (1, 5), (2, 0)]
        assert results[(1, 5)] == "early"


@pytest.mark.slow
def test_sample_reduction_keeps_the_phase():
    h = from_terms(
        4,
        [
            (-0.5, encode("XIII")),
            (-0.45, encode("IXII")),
            (-0.4, encode("IIXI")),
            (-0.35, encode("IIIX")),
            (0.06, encode("ZZII")),
            (0.05, encode("IZZI")),
            (-0.05, encode("IIZZ")),
            (0.04, encode("YZZY")),
        ],
    )
    split = split_deterministic(h, n_deterministic=4)
    ground = ground_state(h)
    delta, max_round = 0.2, 3
    df = reduction_study(
        factory(4),
        ground.vector,
        split,
        delta,
        max_round,
        r_full=30,
        factors=(1.0, 1 / 3),
        seed=3,
        repeats=100,
    )
    assert list(df["r"]) == [30, 10]
    assert df["converged"].all()
    shift = abs(df["energy"].iloc[0] - df["energy"].iloc[1])
    assert shift < resolution(delta, max_round)
