"""Scripted players: classical response-surface agent, expected-improvement
agent, and a replication-heavy agent, plus the season orchestrator.

Agents only see what a human player sees (history of noisy yields,
balance, week) through a client; they never touch the simulator truth.
Each agent owns a seeded generator, so a season against a seeded game
replays identically.

The yield is maximized; the GP layer is minimization-oriented, so the
EI agent models the negated response.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .engine import replicate_cost
from .errors import YieldLabError
from .gp import GPConfig, Suggestion, gp_condition, gp_fit, suggest_next
from .rsm import (
    first_order_terms,
    fit_ols,
    latin_hypercube,
    ridge_analysis,
    second_order_terms,
    steepest_ascent_path,
    stepwise_bic_backward,
)
from .simulate import NUTRIENTS

STRATEGIES = ("classical", "ei", "replicator")


@dataclass
class StrategyConfig:
    """Knobs shared by all strategies; agents ignore what they don't use."""

    name: str
    seed: int = 0
    search_lo: float = 0.5
    search_hi: float = 25.0
    reserve: int = 0                 # units held back each week
    reps_policy: str = "adaptive"    # "adaptive" | "fixed"
    fixed_reps: int = 3
    max_runs_per_week: int = 12


def make_strategy(config: StrategyConfig):
    if config.name == "classical":
        return ClassicalStrategy(config)
    if config.name == "ei":
        return EIStrategy(config)
    if config.name == "replicator":
        return ReplicatorStrategy(config)
    raise ValueError(f"unknown strategy {config.name!r}; expected one of {STRATEGIES}")


# -- history helpers ----------------------------------------------------------


def rows_to_arrays(rows):
    """Replicate-expanded (X, y) from public history records."""
    X, y = [], []
    for r in rows:
        point = [float(r[n]) for n in NUTRIENTS]
        for v in r["yields"]:
            X.append(point)
            y.append(float(v))
    return np.array(X, dtype=float), np.array(y, dtype=float)


def point_means(rows):
    """Unique points with their pooled observed means, best last."""
    sums: dict = {}
    for r in rows:
        key = tuple(float(r[n]) for n in NUTRIENTS)
        s, c = sums.get(key, (0.0, 0))
        sums[key] = (s + sum(r["yields"]), c + len(r["yields"]))
    items = [(np.array(k), s / c) for k, (s, c) in sums.items()]
    items.sort(key=lambda kv: kv[1])
    return items


def _fields(x) -> dict:
    return {n: float(v) for n, v in zip(NUTRIENTS, x)}


# -- strategies ---------------------------------------------------------------


class ReplicatorStrategy:
    """Fixed-design refinement with maximum replication: few unique runs,
    ten replicates each, rotating between exploiting the best observed
    point and probing a fresh space-filling point."""

    def __init__(self, config: StrategyConfig):
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        self._week_runs = 0

    def begin_week(self, week: int, rows) -> list:
        self._week_runs = 0
        return []

    def next_run(self, week: int, rows, balance: int):
        if self._week_runs >= 3:
            return None
        lo, hi = self.config.search_lo, self.config.search_hi
        best, _ = point_means(rows)[-1]
        if self._week_runs == 0:
            x = best
        elif self._week_runs == 1:
            x = best * (1.0 + 0.08 * self.rng.standard_normal(7))
        else:
            x = latin_hypercube(1, 7, (lo, hi), self.rng)[0]
        self._week_runs += 1
        return _fields(np.clip(x, lo, hi)), 10


class EIStrategy:
    """Weekly GP refit on the full history plus sequential expected
    improvement within the week, conditioning the surrogate on each new
    observation at fixed hyperparameters."""

    def __init__(self, config: StrategyConfig):
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        self.model = None
        self._week_runs = 0

    def begin_week(self, week: int, rows) -> list:
        self._week_runs = 0
        X, y = rows_to_arrays(rows)
        self.model = gp_fit(X, -y, GPConfig(n_starts=4, max_iter=70,
                                            seed=self.config.seed + week))
        return []

    def _reps_for(self, suggestion: Suggestion) -> int:
        if self.config.reps_policy == "fixed":
            return self.config.fixed_reps
        return suggestion.recommended_reps

    def next_run(self, week: int, rows, balance: int):
        if self.model is None or self._week_runs >= self.config.max_runs_per_week:
            return None
        lo = np.full(7, self.config.search_lo)
        hi = np.full(7, self.config.search_hi)
        mode = "ei"
        suggestion = suggest_next(self.model, (lo, hi), mode=mode, rng=self.rng,
                                  n_candidates=1200, n_restarts=4)
        self._week_runs += 1
        self._last_suggestion = suggestion
        return _fields(suggestion.point), self._reps_for(suggestion)

    def observe_result(self, record: dict) -> None:
        x = [float(record[n]) for n in NUTRIENTS]
        ys = [-float(v) for v in record["yields"]]
        self.model = gp_condition(self.model, [x] * len(ys), ys)

    def last_suggestion(self):
        return getattr(self, "_last_suggestion", None)


class ClassicalStrategy:
    """The homework arc: first-order fit with backward-BIC screening and
    steepest ascent early, then second-order ridge analysis around the
    best region, with space-filling settings for the inactive inputs."""

    ASCENT_WEEKS = 2

    def __init__(self, config: StrategyConfig):
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        self._queue: list = []
        self.active: list = []

    # -- planning ------------------------------------------------------------

    def begin_week(self, week: int, rows) -> list:
        self._queue = []
        if week <= self.ASCENT_WEEKS:
            self._plan_ascent(week, rows)
        else:
            self._plan_second_order(rows)
        return []

    def _screen(self, rows):
        X, y = rows_to_arrays(rows)
        data = {n: X[:, i] for i, n in enumerate(NUTRIENTS)}
        fit = fit_ols(data, y, first_order_terms(NUTRIENTS), on_alias="drop")
        reduced = stepwise_bic_backward(fit)
        self.active = [t for t in reduced.terms if t != "1"] or ["N", "P", "K"]
        return reduced

    def _plan_ascent(self, week: int, rows) -> None:
        lo, hi = self.config.search_lo, self.config.search_hi
        reduced = self._screen(rows)
        items = point_means(rows)
        if week == 1:
            X, _ = rows_to_arrays(rows)
            x0 = {n: float(X[:, i].mean()) for i, n in enumerate(NUTRIENTS)}
        else:
            best, _ = items[-1]
            x0 = _fields(best)
        try:
            path = steepest_ascent_path(
                reduced, x0, steps=6, step_size=1.2, fill="lhs",
                lower=lo, rng=self.rng,
                fill_bounds={n: (max(lo, x0[n] - 2.0), min(hi, x0[n] + 2.0))
                             for n in NUTRIENTS})
        except YieldLabError:
            self._plan_fallback(rows)
            return
        for pt in path.points:
            x = np.clip([pt[n] for n in NUTRIENTS], lo, hi)
            self._queue.append((_fields(x), 2))

    def _plan_second_order(self, rows) -> None:
        lo, hi = self.config.search_lo, self.config.search_hi
        if not self.active:
            self._screen(rows)
        active = [n for n in self.active if n in NUTRIENTS][:4]
        best, _ = point_means(rows)[-1]
        radius = 2.5
        X, y = rows_to_arrays(rows)
        idx = [NUTRIENTS.index(n) for n in active]
        near = np.all(np.abs(X[:, idx] - best[idx]) <= radius, axis=1)
        terms = second_order_terms(active)
        candidate = None
        if near.sum() >= 2 * len(terms):
            data = {n: X[near, i] for i, n in enumerate(NUTRIENTS)}
            try:
                fit = fit_ols(data, y[near], terms, on_alias="drop")
                canon = ridge_analysis(fit)
                if canon.kind == "maximum":
                    candidate = canon.x_s
                else:
                    walk = [tp for tp in canon.trace
                            if not tp.singular and tp.radius <= 1.5 * radius]
                    if walk:
                        candidate = max(walk, key=lambda tp: tp.predicted).x
            except (YieldLabError, ValueError):
                candidate = None
        if candidate is not None:
            x = best.copy()
            x[idx] = candidate
            x = np.clip(x, lo, hi)
            self._queue.append((_fields(x), 3))
        # confirm the incumbent and keep exploring its neighborhood
        self._queue.append((_fields(np.clip(best, lo, hi)), 3))
        probes = latin_hypercube(4, 7, (np.maximum(lo, best - radius),
                                        np.minimum(hi, best + radius)), self.rng)
        for row in probes:
            self._queue.append((_fields(row), 2))

    def _plan_fallback(self, rows) -> None:
        lo, hi = self.config.search_lo, self.config.search_hi
        for row in latin_hypercube(5, 7, (lo, hi), self.rng):
            self._queue.append((_fields(row), 2))

    def next_run(self, week: int, rows, balance: int):
        if not self._queue:
            return None
        return self._queue.pop(0)


# -- season orchestration -----------------------------------------------------


@dataclass
class WeekLog:
    week: int
    runs: list = field(default_factory=list)
    suggestions: list = field(default_factory=list)
    rejections: list = field(default_factory=list)
    balance_end: int = 0


@dataclass
class Transcript:
    token: str
    strategy: str
    seed: int
    weeks: list = field(default_factory=list)
    final_status: dict = field(default_factory=dict)
    completed: bool = False

    @property
    def total_cost(self) -> int:
        return sum(r["cost"] for w in self.weeks for r in w.runs)

    def unique_runs(self) -> int:
        return sum(len(w.runs) for w in self.weeks)

    def to_dict(self) -> dict:
        return {
            "token": self.token,
            "strategy": self.strategy,
            "seed": self.seed,
            "completed": self.completed,
            "final_status": self.final_status,
            "weeks": [
                {
                    "week": w.week,
                    "runs": w.runs,
                    "suggestions": w.suggestions,
                    "rejections": w.rejections,
                    "balance_end": w.balance_end,
                }
                for w in self.weeks
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def play_season(strategy, client, admin, weeks: int | None = None) -> Transcript:
    """Drive a full season: advance the week, let the strategy plan and
    spend until it declines or the budget gates it, record everything.

    Server rejections are recorded and the season moves on; they never
    crash the agent.
    """
    config = strategy.config
    transcript = Transcript(token=client.token, strategy=config.name,
                            seed=config.seed)
    status = client.status()
    total_weeks = weeks if weeks is not None else status["total_weeks"]
    rows = client.history()

    for _ in range(total_weeks):
        if not admin.advance():
            break
        status = client.status()
        week = status["current_week"]
        log = WeekLog(week=week)
        strategy.begin_week(week, rows)
        while True:
            status = client.status()
            if not status["can_run"]:
                break
            plan = strategy.next_run(week, rows, status["balance"])
            if plan is None:
                break
            fields, reps = plan
            if status["balance"] - config.reserve < replicate_cost(reps):
                reps_affordable = _max_affordable_reps(status["balance"] - config.reserve)
                if reps_affordable == 0:
                    break
                reps = min(reps, reps_affordable)
            suggestion = getattr(strategy, "last_suggestion", lambda: None)()
            if suggestion is not None:
                log.suggestions.append(suggestion.to_dict())
            try:
                record = client.submit(fields, reps)
            except YieldLabError as e:
                log.rejections.append(f"{type(e).__name__}: {e}")
                break
            log.runs.append(record)
            rows.append(record)
            if hasattr(strategy, "observe_result"):
                strategy.observe_result(record)
        log.balance_end = client.status()["balance"]
        transcript.weeks.append(log)

    transcript.final_status = client.status()
    transcript.completed = len(transcript.weeks) > 0
    return transcript


def _max_affordable_reps(balance: int) -> int:
    best = 0
    for r in range(1, 11):
        if replicate_cost(r) <= balance:
            best = r
    return best
