"""Leaderboard series: player progress by week and by run.

De-noised views evaluate the deterministic surface at each run's point
(server-side secret), take running maxima, and normalize by the global
best across all players, so the shared absolute scale is never exposed.
Raw views take running maxima of the observed noisy yields on the
original scale. Every series is non-decreasing by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

from .engine import Game
from .simulate import true_yield

VIEWS = ("by_week_denoised", "by_run_denoised", "by_week_raw", "by_run_raw")


@dataclass
class Series:
    label: str        # initials only; the PIN stays masked
    points: list      # [(x, value)] with x a week index or run index


def _run_values(account, denoised: bool) -> list:
    if denoised:
        return [true_yield(r.point) for r in account.runs]
    return [max(r.yields) for r in account.runs]


def _running_max(values) -> list:
    out = []
    best = None
    for v in values:
        best = v if best is None else max(best, v)
        out.append(best)
    return out


def _by_run(account, denoised: bool) -> list:
    best = _running_max(_run_values(account, denoised))
    return list(enumerate(best, start=1))


def _by_week(account, denoised: bool, through_week: int) -> list:
    values = _run_values(account, denoised)
    points = []
    best = None
    by_week_best: dict = {}
    for r, v in zip(account.runs, values):
        best = v if best is None else max(best, v)
        by_week_best[r.week] = best
    running = None
    for week in range(0, through_week + 1):
        if week in by_week_best:
            running = by_week_best[week]
        if week >= 1 and running is not None:
            points.append((week, running))
    return points


def compute_leaderboard(game: Game, view: str) -> list:
    """Series for one of the four views, one per player, labeled by initials."""
    if view not in VIEWS:
        raise ValueError(f"unknown view {view!r}; expected one of {VIEWS}")
    denoised = view.endswith("denoised")
    by_week = view.startswith("by_week")
    with game.lock:
        accounts = [game.accounts[t] for t in sorted(game.accounts)]
        series = []
        for acct in accounts:
            if by_week:
                pts = _by_week(acct, denoised, game.clock.current_week)
            else:
                pts = _by_run(acct, denoised)
            series.append(Series(label=acct.label, points=pts))
    if denoised:
        peak = max((v for s in series for _, v in s.points), default=0.0)
        if peak > 0:
            series = [Series(label=s.label,
                             points=[(x, v / peak) for x, v in s.points])
                      for s in series]
    return series


def series_to_csv(series, view: str) -> str:
    """Plot-ready delimited form: label, x, value."""
    xname = "week" if view.startswith("by_week") else "run"
    lines = [f"label,{xname},value"]
    for s in series:
        for x, v in s.points:
            lines.append(f"{s.label},{x},{v!r}")
    return "\n".join(lines) + "\n"


def leaderboard_payload(game: Game, view: str) -> dict:
    """JSON-shaped leaderboard for the HTTP API and the web client."""
    series = compute_leaderboard(game, view)
    return {
        "view": view,
        "series": [
            {"label": s.label, "points": [[x, float(v)] for x, v in s.points]}
            for s in series
        ],
    }
