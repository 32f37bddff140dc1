import json
import math

import numpy as np
import pytest

import run
from bench_lib import BENCH_COLUMNS
from common_lib import VERSION, NumericalGuardError, content_hash, read_report

TWO_TERMS = "0.5 X\n0.3 Z\n"
COMMUTING = "0.3 ZI\n0.2 IZ\n"


def run_ok(*argv):
    assert run.main([str(arg) for arg in argv]) == run.EXIT_OK


class TestSimulate:
    def test_eigenstate_rows(self, write_file, tmp_path):
        hamiltonian = write_file("h.txt", "0.7 Z\n")
        state = write_file("psi.txt", "1 1.0\n")
        out = tmp_path / "signals.csv"
        run_ok(
            "simulate", "--hamiltonian", hamiltonian, "--state", state,
            "--delta", 0.0, "--delta", 0.3, "--rounds", 3, "--out", out,
        )  # fmt: skip
        df, footer, header = read_report(out)
        assert footer is None
        assert len(df) == 8
        np.testing.assert_allclose(df["abs_z"], 1.0, atol=1e-10)
        zero = df[df["delta"] == 0]
        np.testing.assert_allclose(zero["re_z"], 1.0)
        np.testing.assert_allclose(zero["im_z"], 0.0, atol=1e-15)

    def test_header(self, write_file, tmp_path):
        hamiltonian = write_file("h.txt", TWO_TERMS)
        out = tmp_path / "signals.csv"
        run_ok("simulate", "--hamiltonian", hamiltonian, "--delta", 0.1, "--out", out)
        _, _, header = read_report(out)
        assert header["version"] == VERSION
        assert header["seed"] == "0"
        assert header["hamiltonian_sha1"] == content_hash(TWO_TERMS)
        config = json.loads(header["config"])
        assert config["deltas"] == [0.1]
        assert config["m"] == 0

    def test_rerun_is_reproducible(self, write_file, tmp_path):
        hamiltonian = write_file("h.txt", "1.0 XI\n0.8 IZ\n0.2 YY\n0.1 ZX\n")
        bodies = []
        for name, seed in [("a.csv", 5), ("b.csv", 5), ("c.csv", 6)]:
            out = tmp_path / name
            run_ok(
                "simulate", "--hamiltonian", hamiltonian, "--ldet", 2,
                "--delta", 0.2, "--delta", 0.4, "--rounds", 3, "--repeats", 2,
                "--workers", 1, "--seed", seed, "--out", out,
            )  # fmt: skip
            df, _, _ = read_report(out)
            bodies.append(df.drop(columns="wall_ms").to_csv(index=False))
        assert bodies[0] == bodies[1]
        assert bodies[0] != bodies[2]

    def test_jobs_do_not_change_results(self, write_file, tmp_path):
        hamiltonian = write_file("h.txt", "1.0 XI\n0.8 IZ\n0.2 YY\n0.1 ZX\n")
        bodies = []
        for jobs in (1, 3):
            out = tmp_path / f"jobs{jobs}.csv"
            run_ok(
                "simulate", "--hamiltonian", hamiltonian, "--ldet", 2,
                "--delta", 0.1, "--delta", 0.2, "--delta", 0.3, "--rounds", 2,
                "--jobs", jobs, "--out", out,
            )  # fmt: skip
            df, _, _ = read_report(out)
            bodies.append(df.drop(columns="wall_ms"))
        assert bodies[0].equals(bodies[1])


class TestRpe:
    def test_two_term_fit(self, write_file, tmp_path):
        hamiltonian = write_file("h.txt", TWO_TERMS)
        out = tmp_path / "fit.csv"
        signals = tmp_path / "signals.csv"
        run_ok(
            "rpe", "--hamiltonian", hamiltonian, "--delta", 0.1, "--delta", 0.2,
            "--delta", 0.4, "--out", out, "--signals", signals,
        )  # fmt: skip
        df, footer, header = read_report(out)
        assert df["resolved"].all()
        assert df["converged"].all()
        fit = footer.iloc[0]
        assert 1.8 <= fit["a"] <= 2.3
        assert fit["bound_dominates"]
        assert fit["c_gs"] <= fit["c_gs_bound"]
        assert "diagnostic" not in header
        assert float(header["e_ref"]) == pytest.approx(-math.sqrt(0.34))
        assert len(read_report(signals)[0]) == 3 * (run.DEFAULT_ROUNDS + 1)

    def test_refit(self, write_file, tmp_path):
        hamiltonian = write_file("h.txt", TWO_TERMS)
        out = tmp_path / "fit.csv"
        run_ok("rpe", "--hamiltonian", hamiltonian, "--delta", 0.1, "--delta", 0.2,
               "--delta", 0.4, "--out", out)  # fmt: skip
        refit = tmp_path / "refit.csv"
        run_ok("fit", "--table", out, "--out", refit)
        _, first, _ = read_report(out)
        points, second, _ = read_report(refit)
        assert list(points.columns) == ["delta", "eps_trot"]
        assert second["c_gs"].iloc[0] == pytest.approx(first["c_gs"].iloc[0])
        assert math.isnan(second["c_gs_bound"].iloc[0])

    def test_commuting_has_no_signal(self, write_file, tmp_path, caplog):
        hamiltonian = write_file("h.txt", COMMUTING)
        out = tmp_path / "fit.csv"
        run_ok(
            "rpe", "--hamiltonian", hamiltonian, "--delta", 0.1, "--delta", 0.2,
            "--delta", 0.4, "--out", out,
        )  # fmt: skip
        df, footer, header = read_report(out)
        assert (df["eps_trot"] < 1e-10).all()
        assert not df["resolved"].any()
        assert header["diagnostic"] == "no signal"
        assert math.isnan(footer["c_gs"].iloc[0])
        assert "no signal" in caplog.text

    def test_needs_positive_steps(self, write_file):
        hamiltonian = write_file("h.txt", TWO_TERMS)
        argv = ["rpe", "--hamiltonian", str(hamiltonian), "--delta", "0"]
        assert run.main(argv) == run.EXIT_CONFIG


class TestBound:
    def test_partial_split(self, write_file, tmp_path):
        hamiltonian = write_file("h.txt", TWO_TERMS)
        out = tmp_path / "bound.csv"
        run_ok("bound", "--hamiltonian", hamiltonian, "--ldet", 1, "--out", out)
        df, _, _ = read_report(out)
        row = df.iloc[0]
        assert row["cgs_bound"] == pytest.approx(0.12)
        assert row["L_det"] == 1

    def test_deterministic_only(self, write_file, tmp_path):
        hamiltonian = write_file("h.txt", TWO_TERMS)
        out = tmp_path / "bound.csv"
        run_ok("bound", "--hamiltonian", hamiltonian, "--out", out)
        row = read_report(out)[0].iloc[0]
        assert row["lambda_R"] == 0
        assert row["cgs_bound"] == pytest.approx(4 * (0.5 * 0.09 + 0.3 * 0.25))

    @pytest.mark.parametrize("text", ["", "# nothing\n", "1.0 II\n"])
    def test_no_terms(self, write_file, caplog, text):
        hamiltonian = write_file("h.txt", text)
        assert run.main(["bound", "--hamiltonian", str(hamiltonian)]) == run.EXIT_INPUT
        assert "no terms" in caplog.text


def test_bench(tmp_path):
    out = tmp_path / "bench.csv"
    run_ok(
        "bench", "--qubits", 6, "--workers", 1, "--bench-L", 1, 10,
        "--repeats", 2, "--out", out,
    )  # fmt: skip
    df, _, header = read_report(out)
    assert list(df.columns) == BENCH_COLUMNS
    assert df["exchanges"].tolist() == [1, 1, 1, 10]
    assert "hamiltonian_sha1" not in header


class TestExitCodes:
    def test_missing_file(self, tmp_path):
        argv = ["bound", "--hamiltonian", str(tmp_path / "absent.txt")]
        assert run.main(argv) == run.EXIT_CONFIG

    def test_malformed_hamiltonian(self, write_file):
        hamiltonian = write_file("h.txt", "0.5 XX\n0.3 XYZ\n")
        assert run.main(["bound", "--hamiltonian", str(hamiltonian)]) == run.EXIT_INPUT

    def test_too_many_workers(self, write_file):
        hamiltonian = write_file("h.txt", TWO_TERMS)
        argv = ["simulate", "--hamiltonian", str(hamiltonian), "--delta", "0.1"]
        assert run.main(argv + ["--workers", "1"]) == run.EXIT_CONFIG

    def test_unnormalized_state(self, write_file):
        hamiltonian = write_file("h.txt", TWO_TERMS)
        state = write_file("psi.txt", "0 0.5\n")
        argv = ["simulate", "--hamiltonian", str(hamiltonian), "--delta", "0.1"]
        assert run.main(argv + ["--state", str(state)]) == run.EXIT_INPUT

    def test_numerical_guard(self, write_file, monkeypatch):
        def tripped(config):
            raise NumericalGuardError("|Z| = 1.1 exceeds 1")

        monkeypatch.setitem(run.COMMANDS, "bound", tripped)
        hamiltonian = write_file("h.txt", TWO_TERMS)
        argv = ["bound", "--hamiltonian", str(hamiltonian)]
        assert run.main(argv) == run.EXIT_NUMERICAL

    def test_bad_split_flag(self, write_file):
        hamiltonian = write_file("h.txt", TWO_TERMS)
        argv = ["bound", "--hamiltonian", str(hamiltonian), "--ldet", "5"]
        assert run.main(argv) == run.EXIT_CONFIG

    def test_argparse_errors_exit_with_config_code(self):
        with pytest.raises(SystemExit) as info:
            run.main(["bound", "--ldet", "1", "--lambda-r-frac", "0.1"])
        assert info.value.code == run.EXIT_CONFIG
