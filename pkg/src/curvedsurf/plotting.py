"""Static figures written next to the CSV tables."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _reference_slope(ax, h, err, order, style="k:"):
    h = np.asarray(h)
    ax.loglog(h, err[-1] * (h / h[-1]) ** order, style, lw=0.8)


def geometry_errors_figure(rows, path, title=""):
    """Errors normalized by their value on the coarsest grid, one panel per quantity."""
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.8), sharex=True)
    orders = sorted({r["k"] for r in rows})
    for ax, (key, label, shift) in zip(axes, [("err_X", "position", 1), ("err_n", "normal", 0),
                                              ("err_H", "mean curvature", -1)]):
        for k in orders:
            if key == "err_H" and k < 2:
                continue
            sel = [r for r in rows if r["k"] == k]
            h = np.array([r["h"] for r in sel])
            e = np.array([r[key] for r in sel])
            ax.loglog(h, e / e[0], "o-", label=f"k={k}")
            _reference_slope(ax, h, e / e[0], k + shift)
        ax.set_title(label)
        ax.set_xlabel("h")
        ax.grid(True, which="both", lw=0.3)
        ax.legend(fontsize=8)
    axes[0].set_ylabel("error / error(coarsest)")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def helmholtz_figure(rows, path):
    fig, ax = plt.subplots(figsize=(5, 4))
    for k in sorted({r["k"] for r in rows}):
        sel = [r for r in rows if r["k"] == k]
        h = np.array([r["h"] for r in sel])
        e = np.array([r["error"] for r in sel])
        ax.loglog(h, e, "o-", label=f"k=r={k}")
        _reference_slope(ax, h, e, k + 1)
    ax.set_xlabel("h")
    ax.set_ylabel("tangential L2 error")
    ax.grid(True, which="both", lw=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def mcf_figure(rows, path):
    t = np.array([r["time"] for r in rows])
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(9, 3.6))
    a1.plot(t, [r["area"] for r in rows])
    a1.set_xlabel("t")
    a1.set_ylabel("area")
    a2.plot(t, [r["mean_radius"] for r in rows], label="mean radius")
    exact = np.array([r["exact_radius"] for r in rows])
    if np.all(np.isfinite(exact)):
        a2.plot(t, exact, "k--", label="sqrt(1 - 4t)")
    a2.set_xlabel("t")
    a2.legend()
    for a in (a1, a2):
        a.grid(True, lw=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
