"""Rendered leaderboard figures, written next to the CSV series."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .leaderboard import VIEWS, compute_leaderboard, series_to_csv

_TITLES = {
    "by_week_denoised": "Best de-noised yield by week (normalized)",
    "by_run_denoised": "Best de-noised yield by run (normalized)",
    "by_week_raw": "Best observed yield by week",
    "by_run_raw": "Best observed yield by run",
}


def render_view(series, view: str, path) -> None:
    """One PNG per view: a line per player, stepping at each new best."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for s in series:
        if not s.points:
            continue
        xs = [x for x, _ in s.points]
        ys = [v for _, v in s.points]
        ax.step(xs, ys, where="post", marker=".", label=s.label)
    ax.set_xlabel("week of play" if view.startswith("by_week") else "run number")
    ax.set_ylabel("normalized best yield" if view.endswith("denoised") else "best yield")
    ax.set_title(_TITLES[view])
    if series:
        ax.legend(loc="lower right", fontsize=8, ncol=2)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def emit_leaderboard(game, outdir) -> dict:
    """Write all four views as CSV series plus rendered PNGs.

    Returns {view: {"csv": path, "png": path}}.
    """
    os.makedirs(outdir, exist_ok=True)
    written = {}
    for view in VIEWS:
        series = compute_leaderboard(game, view)
        csv_path = os.path.join(outdir, f"leaderboard_{view}.csv")
        png_path = os.path.join(outdir, f"leaderboard_{view}.png")
        with open(csv_path, "w") as f:
            f.write(series_to_csv(series, view))
        render_view(series, view, png_path)
        written[view] = {"csv": csv_path, "png": png_path}
    return written
