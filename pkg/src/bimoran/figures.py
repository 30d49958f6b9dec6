"""Matplotlib figures for each experiment kind, rendered to files.

Figures mirror the CSV tables they sit next to: trajectory overlays,
asymptotic-weight sweeps, convergence medians and hitting histograms.
Rendering is deterministic for equal inputs: a fixed svg.hashsalt, no
date metadata, and data taken only from the tables and theory curves.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import theory
from .tables import Table
from .theory import LimitParams

__all__ = [
    "save_figure",
    "trajectories_figure",
    "sweep_figure",
    "convergence_figure",
    "hitting_figure",
    "theory_figure",
    "simulate_figure",
]

_RC = {
    "figure.figsize": (7.0, 4.5),
    "figure.dpi": 100,
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "bimoran",
    "legend.fontsize": 8,
}

# one colour pair (count curve, weight curve) per selection strength, cycled
_PAIRS = [
    ("tab:orange", "tab:green"),
    ("tab:red", "tab:blue"),
    ("tab:purple", "tab:brown"),
    ("tab:pink", "tab:gray"),
]


def save_figure(fig, path) -> Path:
    """Write a figure without volatile metadata and release it.

    The hashsalt must be in force at save time, not just at figure build
    time, for element ids to be reproducible across renders.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    metadata = {"Date": None} if path.suffix == ".svg" else None
    with plt.rc_context(_RC):
        fig.savefig(path, metadata=metadata)
    plt.close(fig)
    return path


def _floats(table: Table, name: str) -> np.ndarray:
    return np.array([float(x) for x in table.column(name)])


def trajectories_figure(tables: dict[float, Table]):
    """Replicate count and weight curves with the limit flow overlaid."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        for index, (s, table) in enumerate(sorted(tables.items())):
            y_color, w_color = _PAIRS[index % len(_PAIRS)]
            t = _floats(table, "t")
            reps = _floats(table, "rep").astype(int)
            y_sim = _floats(table, "y_sim")
            w_sim = _floats(table, "w_sim")
            for rep in np.unique(reps):
                mask = reps == rep
                ax.plot(t[mask], y_sim[mask], color=y_color, alpha=0.25, lw=0.8)
                ax.plot(t[mask], w_sim[mask], color=w_color, alpha=0.25, lw=0.8)
            first = reps == reps[0]
            ax.plot(t[first], _floats(table, "y_theory")[first],
                    color=y_color, lw=2.0, label=f"fraction, s={s:g} (limit)")
            ax.plot(t[first], _floats(table, "w_theory")[first],
                    color=w_color, lw=2.0, label=f"weight, s={s:g} (limit)")
        ax.set_xlabel("rescaled time t = n/N")
        ax.set_ylabel("advantaged fraction / weight fraction")
        ax.set_ylim(0.0, 1.05)
        ax.legend(loc="lower right")
        fig.tight_layout()
    return fig


def sweep_figure(summary: Table):
    """Mean final weights per initial fraction against reference curves."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        s_col = _floats(summary, "s")
        a_col = _floats(summary, "a")
        mean = _floats(summary, "w_mean")
        stderr = _floats(summary, "w_stderr")
        a_grid = np.linspace(min(a_col.min(), 1e-3), min(a_col.max() * 1.1, 0.99), 120)
        ax.plot(a_grid, a_grid, color="gold", lw=1.5, label="neutral (s=0)")
        ax.plot(
            a_grid, [theory.infinite_selection_weight(a) for a in a_grid],
            color="black", lw=1.5, label="infinite selection",
        )
        for index, s in enumerate(sorted(set(s_col))):
            _, color = _PAIRS[index % len(_PAIRS)]
            curve = [theory.asymptotic_weight(LimitParams(a, s)) for a in a_grid]
            ax.plot(a_grid, curve, color=color, lw=1.5, label=f"limit, s={s:g}")
            mask = s_col == s
            ax.errorbar(
                a_col[mask], mean[mask], yerr=stderr[mask],
                fmt="o", ms=4, color=color, capsize=3,
                label=f"simulation, s={s:g}",
            )
        ax.set_xlabel("initial advantaged fraction")
        ax.set_ylabel("final weight fraction of initial group")
        ax.legend(loc="lower right")
        fig.tight_layout()
    return fig


def convergence_figure(summary: Table):
    """Median sup-norm distance to the limit flow versus population size."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        n = _floats(summary, "N")
        median = _floats(summary, "median")
        q25 = _floats(summary, "q25")
        q75 = _floats(summary, "q75")
        ax.errorbar(
            n, median, yerr=[median - q25, q75 - median],
            fmt="o-", color="tab:blue", capsize=4, label="median (quartiles)",
        )
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("population size N")
        ax.set_ylabel("sup-norm distance to limit flow")
        ax.legend()
        fig.tight_layout()
    return fig


def hitting_figure(detail: Table, theory_u: float):
    """Histogram of per-replicate weights at the hitting level."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        outcomes = detail.column("outcome")
        values = [
            float(v)
            for v, outcome in zip(detail.column("w_at_level"), outcomes)
            if outcome == "hit" or outcome == "target"
        ]
        values = [v for v in values if not math.isnan(v)]
        if values:
            ax.hist(values, bins=min(20, max(5, len(values) // 3)),
                    color="tab:blue", alpha=0.7, label="replicates")
            ax.axvline(sum(values) / len(values), color="tab:orange", lw=2,
                       label="sample mean")
        ax.axvline(theory_u, color="black", lw=2, ls="--", label="limit value")
        ax.set_xlabel("advantaged-carried weight fraction at level")
        ax.set_ylabel("replicates")
        ax.legend()
        fig.tight_layout()
    return fig


def theory_figure(time_table: Table, level_table: Table):
    """Limit flow over time plus hitting-level curves, side by side."""
    with plt.rc_context(_RC):
        fig, (left, right) = plt.subplots(1, 2, figsize=(9.0, 4.0))
        t = _floats(time_table, "t")
        for name, color in (("y", "tab:orange"), ("u", "tab:blue"), ("v", "tab:green")):
            left.plot(t, _floats(time_table, name), color=color, label=name)
        left.plot(t, _floats(time_table, "u") + _floats(time_table, "v"),
                  color="black", ls="--", lw=1.0, label="u+v")
        left.set_xlabel("t")
        left.set_ylabel("limit flow")
        left.legend()
        b = _floats(level_table, "b")
        right.plot(b, _floats(level_table, "u_level"), color="tab:blue", label="u at level")
        right.plot(b, _floats(level_table, "v_level"), color="tab:green", label="v at level")
        right.set_xlabel("level b")
        right.set_ylabel("weight at first hitting")
        right.legend()
        fig.tight_layout()
    return fig


def simulate_figure(table: Table):
    """Observables of a single tracked run over rescaled time."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        t = _floats(table, "t")
        y = _floats(table, "y")
        u = _floats(table, "u")
        v = _floats(table, "v")
        ax.plot(t, y, color="tab:orange", label="advantaged fraction")
        ax.plot(t, u + v, color="tab:blue", label="weight fraction")
        ax.plot(t, u, color="tab:blue", alpha=0.4, lw=0.9, label="advantaged-carried")
        ax.plot(t, v, color="tab:green", alpha=0.4, lw=0.9, label="other-carried")
        ax.set_xlabel("rescaled time t = n/N")
        ax.set_ylabel("fraction")
        ax.set_ylim(-0.02, 1.05)
        ax.legend()
        fig.tight_layout()
    return fig
