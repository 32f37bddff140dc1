import functools
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np
import seaborn as sns
from matplotlib.ticker import MaxNLocator

PIL_KWARGS = {"optimize": True}

ROUND = "round m"
STEP = "step size δ"


def fig_with_title(_func=None, *, figsize=(6, 6), ytitle=None):
    def decorator_fig(func):
        """Create a figure with the run name as title."""

        @functools.wraps(func)
        def wrap_func(*args, **kwargs):
            fig = plt.figure(figsize=figsize)
            title = args[0].attrs.get("title", "")
            fig.suptitle(title, y=ytitle)
            value = func(*args, **kwargs)
            assert value is None, f"{func.__name__} should not return a value"
            fig.tight_layout()
            return fig

        return wrap_func

    return decorator_fig if _func is None else decorator_fig(_func)


def write_figs(path_figs, figs):
    path_figs = Path(path_figs)
    path_figs.mkdir(parents=True, exist_ok=True)
    for name, fig in figs.items():
        fig.savefig(path_figs / f"{name}.png", pil_kwargs=PIL_KWARGS)
        plt.close(fig)


@fig_with_title
def plot_signal_amplitude(df_signals):
    ax = sns.lineplot(
        df_signals, x="m", y="abs_z", hue="delta", marker="o", palette="viridis"
    )
    ax.xaxis.set_major_locator(MaxNLocator(integer=True))
    ax.set(xlabel=ROUND, ylabel="|Z_m|", ylim=(0, 1.05), title="Signal Amplitude")
    ax.get_legend().set_title(STEP)


@fig_with_title
def plot_signal_phase(df_signals):
    df = df_signals.assign(phase=np.arctan2(df_signals["im_z"], df_signals["re_z"]))
    ax = sns.scatterplot(df, x="m", y="phase", hue="delta", palette="viridis")
    ax.xaxis.set_major_locator(MaxNLocator(integer=True))
    ax.set(xlabel=ROUND, ylabel="arg Z_m", ylim=(-np.pi, np.pi), title="Signal Phase")
    ax.get_legend().set_title(STEP)


@fig_with_title
def plot_convergence(df_rounds):
    ax = sns.lineplot(
        df_rounds, x="m", y="eps_trot", hue="delta", marker="o", palette="viridis"
    )
    ax.set_yscale("log")
    ax.xaxis.set_major_locator(MaxNLocator(integer=True))
    ax.set(xlabel=ROUND, ylabel="ε_trot", title="Trotter Error per Round")
    ax.get_legend().set_title(STEP)


@fig_with_title
def plot_power_law(df_points, c_gs, a):
    ax = sns.scatterplot(df_points, x="delta", y="eps_trot", s=60)
    if np.isfinite(c_gs) and np.isfinite(a):
        deltas = np.geomspace(df_points["delta"].min(), df_points["delta"].max())
        ax.plot(deltas, c_gs * deltas**a, color="gray", lw=1)
        ax.text(
            0.05,
            0.95,
            f"C_gs = {c_gs:.3g}, a = {a:.2f}",
            transform=ax.transAxes,
            va="top",
        )
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set(xlabel=STEP, ylabel="ε_trot", title="Power Law Fit of Trotter Error")


@fig_with_title(figsize=(8, 6))
def plot_bench(df_bench):
    ax = sns.barplot(df_bench, x="L", y="ms_per_rotation", hue="grouped")
    ax.set_yscale("log")
    ax.set(xlabel="# rotations in group", ylabel="ms per rotation", title="Timing")
    ax.get_legend().set_title("grouped")


@fig_with_title
def plot_scaling(df_scaling):
    ax = sns.lineplot(df_scaling, x="n", y="rotations_per_s", marker="o")
    ax.set_yscale("log")
    ax.xaxis.set_major_locator(MaxNLocator(integer=True))
    ax.set(xlabel="# qubits", ylabel="rotations / s", title="Weak Scaling")
