"""Batch driver: simulate, rpe, fit, bound and bench subcommands."""

import functools
import json
import logging
import math
import sys
from argparse import ArgumentParser
from dataclasses import asdict, dataclass
from pathlib import Path

import pandas as pd

from bench_lib import BENCH_LENGTHS, BENCH_REPEATS, bench_table, weak_scaling
from common_lib import (
    NORM_TOLERANCE,
    ORACLE_MAX_QUBITS,
    VERSION,
    ConfigError,
    InputFormatError,
    NumericalGuardError,
    content_hash,
    read_report,
    read_text,
    timer,
    write_report,
)
from fabric_lib import create_fabric
from formulas_lib import sample_count
from hamiltonian_lib import bound_report, cgs_bound_partial, parse, split_deterministic
from oracle_lib import ground_state
from rpe_lib import (
    DEFAULT_REPEATS,
    convergence_check,
    fit_footer,
    fit_power_law,
    resolution,
    rpe_estimate,
    run_cells,
    signal_frame,
    signal_series,
    trotter_error,
)
from state_lib import basis_state, norm2, parse_state

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INPUT = 3
EXIT_NUMERICAL = 4

DEFAULT_ROUNDS = 6
# Trotter errors below this are indistinguishable from rounding
ERROR_FLOOR = 1e-10
MIN_FIT_POINTS = 3
FIT_COLUMNS = ["delta", "eps_trot", "energy", "resolution", "converged", "resolved"]


@dataclass(frozen=True)
class RunConfig:
    command: str
    hamiltonian: str = None
    state: str = None
    table: str = None
    signals: str = None
    m: int = 0
    deltas: tuple = ()
    rounds: int = DEFAULT_ROUNDS
    ldet: int = None
    lambda_r_frac: float = None
    kappa: float = None
    reduce_samples: float = 1.0
    seed: int = 0
    repeats: int = None
    jobs: int = 1
    out: str = None
    bench_lengths: tuple = BENCH_LENGTHS
    qubits: tuple = ()
    scaling: bool = False
    grouped: bool = True

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"Unknown command: {self.command}")
        needs_hamiltonian = self.command in ("simulate", "rpe", "bound")
        if needs_hamiltonian and self.hamiltonian is None:
            raise ConfigError(f"{self.command} needs --hamiltonian")
        for path in (self.hamiltonian, self.state, self.table):
            if path is not None and not Path(path).is_file():
                raise ConfigError(f"File not readable: {path}")
        if self.ldet is not None and self.lambda_r_frac is not None:
            raise ConfigError("Give at most one of --ldet and --lambda-r-frac")

        if self.command in ("simulate", "rpe"):
            if not self.deltas:
                raise ConfigError(f"{self.command} needs at least one --delta")
            lowest = 0.0 if self.command == "simulate" else math.ulp(0.0)
            if min(self.deltas) < lowest:
                raise ConfigError(f"Step sizes out of range: {self.deltas}")
            if len(set(self.deltas)) != len(self.deltas):
                raise ConfigError(f"Step sizes must be distinct: {self.deltas}")
        if self.command == "fit" and self.table is None:
            raise ConfigError("fit needs --table")
        if self.command == "bench":
            if not self.qubits:
                raise ConfigError("bench needs --qubits")
            if not self.scaling and len(self.qubits) != 1:
                raise ConfigError(f"bench times one qubit count: {self.qubits}")
            if not self.scaling and not self.m < self.qubits[0]:
                raise ConfigError(f"--workers {self.m} needs m < n = {self.qubits[0]}")
            if min(self.bench_lengths) < 1:
                raise ConfigError(f"Group lengths must be >= 1: {self.bench_lengths}")

        if self.rounds < 0:
            raise ConfigError(f"--rounds must be >= 0: {self.rounds}")
        if self.m < 0:
            raise ConfigError(f"--workers must be >= 0: {self.m}")
        if self.jobs < 1:
            raise ConfigError(f"--jobs must be >= 1: {self.jobs}")
        if self.repeats is not None and self.repeats < 1:
            raise ConfigError(f"--repeats must be >= 1: {self.repeats}")
        if not 0.0 < self.reduce_samples <= 1.0:
            raise ConfigError(
                f"--reduce-samples must be in (0, 1]: {self.reduce_samples}"
            )
        if self.kappa is not None and self.kappa <= 0:
            raise ConfigError(f"--kappa must be positive: {self.kappa}")
        return self

    def repeats_for(self, default):
        return default if self.repeats is None else self.repeats


def report_header(config, hamiltonian_text=None):
    header = {
        "version": VERSION,
        "command": config.command,
        "config": json.dumps(asdict(config), sort_keys=True),
        "seed": config.seed,
    }
    if hamiltonian_text is not None:
        header["hamiltonian_sha1"] = content_hash(hamiltonian_text)
    return header


def load_problem(config):
    """Hamiltonian text, Hamiltonian and split selected by the config."""
    text = read_text(config.hamiltonian)
    hamiltonian = parse(text)
    if not config.m < hamiltonian.n_qubits:
        raise ConfigError(
            f"--workers {config.m} needs m < n = {hamiltonian.n_qubits}"
        )
    if config.lambda_r_frac is not None:
        split = split_deterministic(
            hamiltonian, lambda_r_fraction=config.lambda_r_frac
        )
    else:
        n_det = len(hamiltonian) if config.ldet is None else config.ldet
        if not 0 <= n_det <= len(hamiltonian):
            raise ConfigError(f"--ldet must be in 0..{len(hamiltonian)}: {n_det}")
        split = split_deterministic(hamiltonian, n_deterministic=n_det)
    logger.info(
        f"n={hamiltonian.n_qubits}, L={len(hamiltonian)}, "
        f"L_det={split.n_deterministic}, lambda_R={split.lam_r:.6g}"
    )
    return text, hamiltonian, split


def initial_state(config, hamiltonian):
    n = hamiltonian.n_qubits
    if config.state is not None:
        state = parse_state(read_text(config.state), n)
        if abs(norm2(state) - 1.0) > NORM_TOLERANCE:
            raise InputFormatError(f"State in {config.state} is not normalized")
        return state
    if n <= ORACLE_MAX_QUBITS:
        ground = ground_state(hamiltonian)
        if ground.degenerate:
            logger.warning("Ground state is degenerate; using one eigenvector")
        return ground.vector
    return basis_state(n, 0)


def samples_for(config, split, delta):
    if split.lam_r == 0 or delta == 0:
        return 0
    return sample_count(
        split.lam_r, delta, config.rounds, config.kappa, config.reduce_samples
    )


def collect_signals(config, psi0, split):
    """One signal series per step size, run as independent cells."""
    factory = functools.partial(create_fabric, split.n_qubits, config.m)
    repeats = config.repeats_for(DEFAULT_REPEATS)
    cells = {
        idx: functools.partial(
            signal_series,
            factory,
            psi0,
            split,
            delta,
            config.rounds,
            samples_for(config, split, delta),
            config.seed,
            repeats,
            config.grouped,
        )
        for idx, delta in enumerate(config.deltas)
    }
    results = run_cells(cells, config.jobs)
    return [results[idx] for idx in range(len(config.deltas))]


def signals_table(config, series):
    df = pd.concat([signal_frame(records) for records in series], ignore_index=True)
    df.attrs["name"] = "signals"
    df.attrs["title"] = Path(config.hamiltonian).stem
    return df


@timer
def cmd_simulate(config):
    text, hamiltonian, split = load_problem(config)
    psi0 = initial_state(config, hamiltonian)
    df = signals_table(config, collect_signals(config, psi0, split))
    write_report(df, config.out, report_header(config, text))
    return df


def error_rows(config, series, e_ref):
    rows = []
    for delta, records in zip(config.deltas, series):
        estimate = rpe_estimate([rec.z for rec in records], delta)
        errors = [trotter_error(energy, e_ref) for energy in estimate.round_energies]
        eps = errors[-1] if errors else math.nan
        floor = resolution(delta, config.rounds)
        # Round M-1 is only resolved to twice the final resolution
        settled = convergence_check(errors, atol=2 * floor)
        rows.append(
            {
                "delta": delta,
                "eps_trot": eps,
                "energy": estimate.energy,
                "resolution": floor,
                "converged": estimate.converged and (settled or config.rounds == 0),
                "resolved": bool(eps > ERROR_FLOOR * max(1.0, abs(e_ref))),
            }
        )
    return pd.DataFrame(rows, columns=FIT_COLUMNS)


def fit_resolved(df):
    """Power-law fit over the resolved rows, or None with a diagnostic."""
    resolved = df[df["resolved"]] if "resolved" in df else df
    if len(resolved) < MIN_FIT_POINTS:
        logger.warning(
            f"no signal: {len(resolved)} of {len(df)} step sizes resolve a "
            f"Trotter error, fit rejected"
        )
        return None
    return fit_power_law(zip(resolved["delta"], resolved["eps_trot"]))


@timer
def cmd_rpe(config):
    text, hamiltonian, split = load_problem(config)
    e_ref = ground_state(hamiltonian).energy
    psi0 = initial_state(config, hamiltonian)
    series = collect_signals(config, psi0, split)
    if config.signals is not None:
        signals = signals_table(config, series)
        write_report(signals, config.signals, report_header(config, text))

    df = error_rows(config, series, e_ref)
    fit = fit_resolved(df)
    footer = fit_footer(fit, cgs_bound_partial(split))
    header = report_header(config, text)
    header["e_ref"] = f"{e_ref:.17g}"
    if fit is None:
        header["diagnostic"] = "no signal"
    df.attrs["title"] = Path(config.hamiltonian).stem
    write_report(df, config.out, header, footer)
    return df, footer


@timer
def cmd_fit(config):
    df, _, _ = read_report(config.table)
    missing = {"delta", "eps_trot"} - set(df.columns)
    if missing:
        raise InputFormatError(f"{config.table} lacks columns {sorted(missing)}")

    text = None
    c_gs_bound = math.nan
    if config.hamiltonian is not None:
        text, _, split = load_problem(config)
        c_gs_bound = cgs_bound_partial(split)

    fit = fit_resolved(df)
    points = df[["delta", "eps_trot"]]
    footer = fit_footer(fit, c_gs_bound)
    header = report_header(config, text)
    if fit is None:
        header["diagnostic"] = "no signal"
    write_report(points, config.out, header, footer)
    return points, footer


@timer
def cmd_bound(config):
    text, hamiltonian, split = load_problem(config)
    if len(hamiltonian) == 0:
        raise InputFormatError("Hamiltonian has no terms beyond the identity")
    df = bound_report(split)
    write_report(df, config.out, report_header(config, text))
    return df


@timer
def cmd_bench(config):
    repeats = config.repeats_for(BENCH_REPEATS)
    header = report_header(config)
    if config.scaling:
        df = weak_scaling(config.qubits, repeats=repeats, seed=config.seed)
        header["slope"] = f"{df.attrs['slope']:.4f}"
    else:
        df = bench_table(
            config.qubits[0],
            config.m,
            config.bench_lengths,
            repeats,
            config.seed,
            config.jobs,
        )
    write_report(df, config.out, header)
    return df


COMMANDS = {
    "simulate": cmd_simulate,
    "rpe": cmd_rpe,
    "fit": cmd_fit,
    "bound": cmd_bound,
    "bench": cmd_bench,
}


def build_parser():
    common = ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="base seed of all samples")
    common.add_argument("--out", type=Path, help="output CSV (default: stdout)")
    common.add_argument("--workers", type=int, default=0, help="m, for 2**m workers")
    common.add_argument("--jobs", type=int, default=1, help="# concurrent cells")
    common.add_argument("--repeats", type=int, help="# independent runs to average")
    common.add_argument("-v", "--verbose", action="store_true")
    common.add_argument("-q", "--quiet", action="store_true")

    problem = ArgumentParser(add_help=False)
    problem.add_argument("--hamiltonian", type=Path, help="Pauli-sum text file")
    problem.add_argument("--state", type=Path, help="initial state text file")
    criterion = problem.add_mutually_exclusive_group()
    criterion.add_argument("--ldet", type=int, help="# deterministic terms")
    criterion.add_argument(
        "--lambda-r-frac", type=float, help="largest randomized share of lambda"
    )
    problem.add_argument(
        "--ungrouped", action="store_true", help="one exchange per rotation"
    )

    evolution = ArgumentParser(add_help=False)
    evolution.add_argument(
        "--delta", type=float, action="append", default=[], help="step size"
    )
    evolution.add_argument("--rounds", type=int, default=DEFAULT_ROUNDS, help="M")
    evolution.add_argument("--kappa", type=float, help="override of kappa")
    evolution.add_argument(
        "--reduce-samples", type=float, default=1.0, help="sample reduction factor"
    )

    parser = ArgumentParser(description="Pauli-rotation state-vector simulations")
    subparsers = parser.add_subparsers(dest="command", required=True)
    subparsers.add_parser(
        "simulate", parents=[common, problem, evolution], help="signal CSV"
    )
    rpe = subparsers.add_parser(
        "rpe", parents=[common, problem, evolution], help="Trotter error fit"
    )
    rpe.add_argument("--signals", type=Path, help="also write the signal CSV")
    fit = subparsers.add_parser("fit", parents=[common, problem], help="refit")
    fit.add_argument("--table", type=Path, help="delta,eps_trot table")
    subparsers.add_parser("bound", parents=[common, problem], help="C_gs bound")
    bench = subparsers.add_parser("bench", parents=[common], help="timings")
    bench.add_argument("--qubits", type=int, nargs="+", default=[], help="n")
    bench.add_argument(
        "--bench-L", type=int, nargs="+", default=list(BENCH_LENGTHS), help="group L"
    )
    bench.add_argument("--scaling", action="store_true", help="throughput against n")
    return parser


def config_from_args(args):
    def optional_path(name):
        value = getattr(args, name, None)
        return None if value is None else str(value)

    return RunConfig(
        command=args.command,
        hamiltonian=optional_path("hamiltonian"),
        state=optional_path("state"),
        table=optional_path("table"),
        signals=optional_path("signals"),
        m=args.workers,
        deltas=tuple(getattr(args, "delta", ())),
        rounds=getattr(args, "rounds", DEFAULT_ROUNDS),
        ldet=getattr(args, "ldet", None),
        lambda_r_frac=getattr(args, "lambda_r_frac", None),
        kappa=getattr(args, "kappa", None),
        reduce_samples=getattr(args, "reduce_samples", 1.0),
        seed=args.seed,
        repeats=args.repeats,
        jobs=args.jobs,
        out=optional_path("out"),
        bench_lengths=tuple(getattr(args, "bench_L", BENCH_LENGTHS)),
        qubits=tuple(getattr(args, "qubits", ())),
        scaling=getattr(args, "scaling", False),
        grouped=not getattr(args, "ungrouped", False),
    )


def configure_logging(verbose=False, quiet=False):
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(
        level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )


def main(argv=None):
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    try:
        config = config_from_args(args).validate()
        COMMANDS[config.command](config)
    except InputFormatError as err:
        logger.error(f"input format: {err}")
        return EXIT_INPUT
    except NumericalGuardError as err:
        logger.error(f"numerical guard: {err}")
        return EXIT_NUMERICAL
    except ValueError as err:
        logger.error(f"config: {err}")
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
