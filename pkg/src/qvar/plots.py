"""Figure rendering for the report paths; all figures go to files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _finish(fig, ax, path, title, xlabel, ylabel):
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_diff_profile(path, n, lower, upper, title="difference profile"):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(n, upper, lw=1.2, label="upper")
    if lower is not None and (lower != upper).any():
        ax.plot(n, lower, lw=1.0, ls="--", label="lower")
        ax.legend()
    _finish(fig, ax, path, title, "n", "n ||T^n - T^(n-1)||")


def save_constants(path, truncations, constants, title="empirical constants"):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogx(truncations, constants, "o-", base=2)
    _finish(fig, ax, path, title, "truncation", "constant")


def save_sweep(path, qs, constants, title="q sweep"):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(qs, constants, "o-")
    ax.invert_xaxis()
    _finish(fig, ax, path, title, "q", "constant")


def save_convergence(path, schedule, distances, title="pointwise convergence"):
    fig, ax = plt.subplots(figsize=(6, 4))
    safe = [max(d, 1e-18) for d in distances]
    ax.semilogy(schedule, safe, "o-")
    _finish(fig, ax, path, title, "schedule", "sup distance")


def save_semigroup_profile(path, t, c0_vals, c1_vals, title="semigroup profile"):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(t, c0_vals, lw=1.2, label="||T_t||")
    ax.loglog(t, [max(v, 1e-18) for v in c1_vals], lw=1.2, label="||t A T_t||")
    ax.legend()
    _finish(fig, ax, path, title, "t", "norm")
