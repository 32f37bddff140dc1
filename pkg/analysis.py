import logging
import warnings
from argparse import ArgumentParser
from pathlib import Path

import pandas as pd

from common_lib import read_report
from plotting import (
    plot_bench,
    plot_convergence,
    plot_power_law,
    plot_scaling,
    plot_signal_amplitude,
    plot_signal_phase,
    write_figs,
)
from rpe_lib import rpe_estimate, trotter_error

logger = logging.getLogger(__name__)


def round_errors(df_signals, e_ref):
    """Trotter error of the running phase estimate after every round."""
    rows = []
    for delta, df in df_signals.groupby("delta", sort=True):
        if delta == 0:
            continue
        df = df.sort_values("m")
        zs = (df["re_z"] + 1j * df["im_z"]).to_numpy()
        estimate = rpe_estimate(zs, delta)
        for m, energy in enumerate(estimate.round_energies):
            rows.append((delta, m, trotter_error(energy, e_ref)))
    df_rounds = pd.DataFrame(rows, columns=["delta", "m", "eps_trot"])
    df_rounds.attrs = dict(df_signals.attrs)
    return df_rounds


def make_all_figs(df, footer=None, e_ref=None):
    """Every figure the columns of a report support."""
    figs = {}
    columns = set(df.columns)

    if {"m", "abs_z"} <= columns:
        figs["amplitude"] = plot_signal_amplitude(df)
        figs["phase"] = plot_signal_phase(df)
        if e_ref is not None:
            figs["convergence"] = plot_convergence(round_errors(df, e_ref))

    if {"delta", "eps_trot"} <= columns and footer is not None:
        fit = footer.iloc[0]
        points = df[df["resolved"]] if "resolved" in columns else df
        points.attrs = dict(df.attrs)
        figs["power_law"] = plot_power_law(points, fit["c_gs"], fit["a"])

    if "ms_per_rotation" in columns:
        figs["bench"] = plot_bench(df)

    if "rotations_per_s" in columns:
        figs["scaling"] = plot_scaling(df)

    return figs


if __name__ == "__main__":
    warnings.simplefilter(action="ignore", category=FutureWarning)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")

    parser = ArgumentParser(description="Renders figures from run.py reports")
    parser.add_argument("reports", type=Path, nargs="+", help="CSV reports")
    parser.add_argument("--figs", type=Path, default=Path("figures"), help="out dir")
    parser.add_argument(
        "--e-ref", type=float, help="reference energy for signal reports"
    )
    args = parser.parse_args()

    for path in args.reports:
        logger.info(path)
        df, footer, header = read_report(path)
        df.attrs["title"] = path.stem
        e_ref = args.e_ref
        if e_ref is None and "e_ref" in header:
            e_ref = float(header["e_ref"])
        figs = make_all_figs(df, footer, e_ref)
        write_figs(args.figs / path.stem, figs)
