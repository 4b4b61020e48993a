"""Report figures rendered from a diagnostics CSV.

The run path never plots; this post-processing step turns the delimited
output into publication-style PNGs next to the CSV (or into a chosen
directory): energy traces, conservation errors, the per-component
magnetic energies whose growth signals the instability, and the solver
iteration counts.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_RC = {
    "figure.figsize": (7.0, 4.4),
    "figure.dpi": 130,
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
    "legend.framealpha": 0.8,
    "savefig.bbox": "tight",
}


def load_diagnostics(csv_path: str) -> np.ndarray:
    """Structured array of the diagnostics table."""
    data = np.genfromtxt(csv_path, delimiter=",", names=True)
    if data.ndim == 0:
        data = data.reshape(1)
    return data


def _save(fig, out_dir: str, name: str, written: list[str]) -> None:
    path = os.path.join(out_dir, name)
    fig.savefig(path)
    plt.close(fig)
    written.append(path)


def render_report(csv_path: str, out_dir: str | None = None) -> list[str]:
    """Render the standard figure set; returns the written file paths."""
    d = load_diagnostics(csv_path)
    out_dir = out_dir or os.path.dirname(os.path.abspath(csv_path))
    os.makedirs(out_dir, exist_ok=True)
    written: list[str] = []
    t = d["t"]

    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.plot(t, d["kinetic"], label="kinetic")
        ax.plot(t, d["electric"], label="electric")
        ax.plot(t, d["magnetic"], label="magnetic")
        ax.plot(t, d["total"], "k--", label="total")
        ax.set_xlabel("t")
        ax.set_ylabel("energy")
        ax.legend(ncol=4)
        _save(fig, out_dir, "energies.png", written)

        fig, ax = plt.subplots()
        for name, label in (
            ("magnetic_b1", "$B_1$"),
            ("magnetic_b2", "$B_2$"),
            ("magnetic_b3", "$B_3$"),
        ):
            vals = np.maximum(d[name], 1e-300)
            ax.semilogy(t, vals, label=label)
        ax.set_xlabel("t")
        ax.set_ylabel("magnetic energy per component")
        ax.legend()
        _save(fig, out_dir, "magnetic_components.png", written)

        fig, ax = plt.subplots()
        h0 = d["total"][0]
        rel = np.abs(d["total"] - h0) / abs(h0) if h0 != 0 else np.abs(d["total"])
        ax.semilogy(t, np.maximum(rel, 1e-300), label="|H - H(0)| / H(0)")
        ax.semilogy(t, np.maximum(d["gauss_inf"], 1e-300), label="Gauss residual")
        ax.semilogy(t, np.maximum(d["divb_inf"], 1e-300), label="div B")
        ax.set_xlabel("t")
        ax.set_ylabel("conservation error")
        ax.legend()
        _save(fig, out_dir, "conservation.png", written)

        fig, ax = plt.subplots()
        ax.plot(t, d["iters_mass"], label="mass solves")
        ax.plot(t, d["iters_outer"], label="field/particle solves")
        ax.plot(t, d["iters_picard"], label="fixed-point sweeps")
        ax.set_xlabel("t")
        ax.set_ylabel("max iterations per step")
        ax.legend()
        _save(fig, out_dir, "solver_iterations.png", written)

    return written
