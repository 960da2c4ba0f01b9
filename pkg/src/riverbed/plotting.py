"""SVG line plots for run outputs (presentation only, never read back)."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed ids and no timestamp so reruns produce identical files
plt.rcParams.update({"svg.hashsalt": "riverbed", "figure.figsize": (6.0, 4.0), "font.size": 9})


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_recovered(path, t, p_true, p_best, p_initial, best_iteration=None, snapshots=None):
    fig, ax = plt.subplots()
    ax.plot(t, p_initial, color="0.7", lw=0.6, label="initial guess")
    if snapshots:
        for it, vals in sorted(snapshots.items()):
            ax.plot(t, vals, lw=0.5, alpha=0.5, label=f"iter {it}")
    ax.plot(t, p_true, "k-", lw=1.5, label="true")
    lab = "best" if best_iteration is None else f"best (iter {best_iteration})"
    ax.plot(t, p_best, "r--", lw=1.2, label=lab)
    ax.set_xlabel("t")
    ax.set_ylabel("p(t)")
    ax.legend(fontsize=6, ncol=2)
    _save(fig, path)


def plot_residue(path, j0):
    j0 = np.asarray(j0)
    it = np.arange(1, len(j0) + 1)
    fig, ax = plt.subplots()
    ax.loglog(it, j0, "b-")
    ax.set_xlabel("iteration + 1")
    ax.set_ylabel("J0")
    _save(fig, path)


def plot_lcurve(path, residual, regularizer, gamma_hat, corner=None):
    fig, ax = plt.subplots()
    ax.loglog(residual, regularizer, "o-")
    for x, y, g in zip(residual, regularizer, gamma_hat):
        ax.annotate(f"{g:g}", (x, y), fontsize=6, xytext=(3, 3), textcoords="offset points")
    if corner is not None:
        ax.loglog([residual[corner]], [regularizer[corner]], "rs", ms=8, mfc="none")
    ax.set_xlabel("min J0")
    ax.set_ylabel("regularizer at best iterate")
    _save(fig, path)


def plot_taylor(path, k, r1, r2):
    fig, ax = plt.subplots()
    ax.loglog(k, r1, "o-", label="R1")
    ax.loglog(k, r2, "s-", label="R2")
    ax.loglog(k, r1[0] * (k / k[0]), "k:", lw=0.7, label="slope 1")
    ax.loglog(k, r2[0] * (k / k[0]) ** 2, "k--", lw=0.7, label="slope 2")
    ax.set_xlabel("k")
    ax.legend()
    _save(fig, path)


def plot_accuracy(path, table):
    fig, ax = plt.subplots()
    for k in sorted({r["degree"] for r in table}):
        rows = [r for r in table if r["degree"] == k]
        ax.loglog([r["n_cells"] for r in rows], [r["err_h"] for r in rows], "o-", label=f"h, k={k}")
        ax.loglog([r["n_cells"] for r in rows], [r["err_hu"] for r in rows], "s--", label=f"hu, k={k}")
    ax.set_xlabel("N")
    ax.set_ylabel("L1 error")
    ax.legend(fontsize=7)
    _save(fig, path)
