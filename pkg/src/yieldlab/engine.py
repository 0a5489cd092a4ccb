"""Game engine: budget economy, week clock, run authorization, initial design.

All mutating operations on a Game take its lock, so a single positive
balance can never admit two runs and leaderboard readers always see a
consistent snapshot. Run history is append-only: records are frozen and
nothing removes them.
"""

from __future__ import annotations

import math
import re
import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DuplicateTokenError,
    FieldValidationError,
    MalformedTokenError,
    RunRejectedError,
    RunsNotOpenError,
    UnknownTokenError,
)
from .rsm import latin_hypercube
from .simulate import (
    MAX_REPS,
    MIN_REPS,
    NUTRIENTS,
    InputPoint,
    NoiseSchedule,
    make_rng,
    observe,
)

TOKEN_PATTERN = re.compile(r"^[A-Za-z]{2,4}[0-9]{4}$")

#: Decimal-number grammar shared with the browser client: plain decimals
#: with optional sign and exponent; rejects hex, NaN, Infinity, etc.
NUMBER_PATTERN = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")

#: Marginal cost of each successive replicate within one run.
MARGINAL_COSTS = (10, 3, 3, 3, 2, 2, 2, 1, 1, 1)


def replicate_cost(reps: int) -> int:
    """Cost in units of a run with the given replicate count.

    First replicate 10; each of 2-4 adds 3; 5-7 add 2; 8-10 add 1.
    """
    if not isinstance(reps, int) or isinstance(reps, bool) or not (MIN_REPS <= reps <= MAX_REPS):
        raise FieldValidationError(
            "reps", f"reps must be an integer in [{MIN_REPS}, {MAX_REPS}], got {reps!r}")
    return sum(MARGINAL_COSTS[:reps])


def token_label(token: str) -> str:
    """Public label for a token: the initials, PIN masked off."""
    return token[:-4]


def validate_token(token: str) -> str:
    if not isinstance(token, str) or not TOKEN_PATTERN.match(token):
        raise MalformedTokenError(
            "token must be 2-4 letters followed by exactly 4 digits")
    return token


def validate_point_fields(fields, max_input: float) -> InputPoint:
    """API-boundary validation: all seven coordinates present, strictly
    positive, finite, and no larger than the configured cap.

    Raises FieldValidationError naming the first offending field in
    canonical order. Numeric strings are accepted (form inputs arrive as
    text).
    """
    values = {}
    for name in NUTRIENTS:
        if name not in fields or fields[name] is None:
            raise FieldValidationError(name, f"{name} is missing")
        raw = fields[name]
        if isinstance(raw, str):
            raw = raw.strip()
            if raw == "":
                raise FieldValidationError(name, f"{name} is empty")
            if not NUMBER_PATTERN.match(raw):
                raise FieldValidationError(name, f"{name} is not a number: {fields[name]!r}")
        elif isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise FieldValidationError(name, f"{name} is not a number: {fields[name]!r}")
        try:
            v = float(raw)
        except (TypeError, ValueError):
            raise FieldValidationError(name, f"{name} is not a number: {fields[name]!r}")
        if not math.isfinite(v):
            raise FieldValidationError(name, f"{name} must be finite")
        if v <= 0:
            raise FieldValidationError(name, f"{name} must be positive")
        if v > max_input:
            raise FieldValidationError(name, f"{name} exceeds the maximum of {max_input}")
        values[name] = v
    return InputPoint.from_dict(values)


def validate_reps(reps) -> int:
    if isinstance(reps, bool) or not isinstance(reps, int):
        if isinstance(reps, float) and reps.is_integer():
            reps = int(reps)
        else:
            try:
                reps = int(str(reps))
            except (TypeError, ValueError):
                raise FieldValidationError("reps", f"reps must be an integer, got {reps!r}")
    if not (MIN_REPS <= reps <= MAX_REPS):
        raise FieldValidationError(
            "reps", f"reps must be between {MIN_REPS} and {MAX_REPS}, got {reps}")
    return reps


@dataclass(frozen=True)
class RunRecord:
    """One experiment: immutable once written."""

    run_id: int
    week: int
    point: InputPoint
    reps: int
    cost: int
    yields: tuple

    def to_dict(self) -> dict:
        d = {"run_id": self.run_id, "week": self.week}
        d.update(self.point.to_dict())
        d["reps"] = self.reps
        d["cost"] = self.cost
        d["yields"] = list(self.yields)
        return d


@dataclass
class PlayerAccount:
    """Identity token, budget ledger, and ordered run history."""

    token: str
    created_week: int
    balance: int = 0
    accrued_weeks: set = field(default_factory=set)
    runs: list = field(default_factory=list)

    @property
    def label(self) -> str:
        return token_label(self.token)

    @property
    def spent(self) -> int:
        return sum(r.cost for r in self.runs)

    @property
    def accrued(self) -> int:
        # Ledger identity: balance == accrued - spent, checked in tests.
        return self.balance + self.spent


@dataclass
class GameClock:
    current_week: int = 0
    total_weeks: int = 13
    weekly_allowance: int = 100


@dataclass
class GameConfig:
    """Everything that determines a game up to randomness: seed, schedule,
    clock defaults, initial-design geometry, and input caps.

    The initial design samples N, P, K, Na, Ca, Nx over [3.25, 5.25] and
    Mg over [10, 18]: a region where the response is close to first order
    (lack of fit well below the noise floor) and the Mg effect is already
    asymptotically flat, so first-order screening on the shared data
    behaves the way the course narrative expects.
    """

    seed: int = 2026
    schedule: NoiseSchedule = field(default_factory=NoiseSchedule)
    total_weeks: int = 13
    weekly_allowance: int = 100
    design_points: int = 35
    design_reps: int = 5
    design_lo: tuple = (3.25, 3.25, 3.25, 3.25, 3.25, 10.0, 3.25)
    design_hi: tuple = (5.25, 5.25, 5.25, 5.25, 5.25, 18.0, 5.25)
    design_maximin: int = 16
    max_input: float = 1000.0

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "schedule": self.schedule.to_dict(),
            "total_weeks": self.total_weeks,
            "weekly_allowance": self.weekly_allowance,
            "design_points": self.design_points,
            "design_reps": self.design_reps,
            "design_lo": list(self.design_lo),
            "design_hi": list(self.design_hi),
            "design_maximin": self.design_maximin,
            "max_input": self.max_input,
        }

    @classmethod
    def from_dict(cls, d) -> "GameConfig":
        return cls(
            seed=int(d["seed"]),
            schedule=NoiseSchedule.from_dict(d["schedule"]),
            total_weeks=int(d["total_weeks"]),
            weekly_allowance=int(d["weekly_allowance"]),
            design_points=int(d["design_points"]),
            design_reps=int(d["design_reps"]),
            design_lo=tuple(float(v) for v in d["design_lo"]),
            design_hi=tuple(float(v) for v in d["design_hi"]),
            design_maximin=int(d["design_maximin"]),
            max_input=float(d["max_input"]),
        )


def seed_initial_design(config: GameConfig) -> list:
    """The shared week-0 design: one maximin Latin hypercube and one set of
    replicate observations, copied verbatim into every player's history.

    Drawn from a stream derived from the game seed but separate from the
    live observation stream, so provisioning players never perturbs
    replay of in-game runs.
    """
    rng = make_rng(config.seed, stream=1)
    pts = latin_hypercube(config.design_points, len(NUTRIENTS),
                          (np.array(config.design_lo), np.array(config.design_hi)),
                          rng, maximin=config.design_maximin)
    design = []
    for row in pts:
        point = InputPoint.from_array(row)
        obs = observe(point, week=0, reps=config.design_reps, rng=rng,
                      schedule=config.schedule)
        design.append((point, obs.noisy_yields))
    return design


class Game:
    """One game instance: clock, accounts, shared design, observation stream."""

    def __init__(self, config: GameConfig | None = None, _defer_init: bool = False):
        self.config = config or GameConfig()
        self.clock = GameClock(current_week=0,
                               total_weeks=self.config.total_weeks,
                               weekly_allowance=self.config.weekly_allowance)
        self.accounts: dict = {}
        self.lock = threading.RLock()
        if not _defer_init:
            self.rng = make_rng(self.config.seed, stream=0)
            self.initial_design = seed_initial_design(self.config)

    # -- accounts ----------------------------------------------------------

    def provision(self, token: str) -> PlayerAccount:
        """Create an account: validates the token, seeds the shared design at
        zero cost, and catches up accruals for every week so far (week 0
        included)."""
        validate_token(token)
        with self.lock:
            if token in self.accounts:
                raise DuplicateTokenError(f"token {token!r} is already provisioned")
            account = PlayerAccount(token=token, created_week=self.clock.current_week)
            for run_id, (point, yields) in enumerate(self.initial_design, start=1):
                account.runs.append(RunRecord(
                    run_id=run_id, week=0, point=point,
                    reps=len(yields), cost=0, yields=tuple(yields)))
            for week in range(self.clock.current_week + 1):
                self.accrue_week(account, week)
            self.accounts[token] = account
            return account

    def account(self, token: str) -> PlayerAccount:
        try:
            return self.accounts[token]
        except KeyError:
            raise UnknownTokenError(f"no account for token {token!r}")

    # -- ledger ------------------------------------------------------------

    def accrue_week(self, account: PlayerAccount, week: int | None = None) -> bool:
        """Add the weekly allowance once per (account, week); re-invocation
        for the same week is a no-op. Returns whether anything accrued."""
        if week is None:
            week = self.clock.current_week
        with self.lock:
            if week in account.accrued_weeks:
                return False
            account.accrued_weeks.add(week)
            account.balance += self.clock.weekly_allowance
            return True

    @staticmethod
    def can_run(account: PlayerAccount) -> bool:
        """In the black means strictly positive balance."""
        return account.balance > 0

    def advance_week(self) -> bool:
        """Admin operation: move the clock forward one week and accrue every
        account. Clamped at total_weeks (returns False, nothing accrues)."""
        with self.lock:
            if self.clock.current_week >= self.clock.total_weeks:
                return False
            self.clock.current_week += 1
            for account in self.accounts.values():
                self.accrue_week(account, self.clock.current_week)
            return True

    # -- runs ----------------------------------------------------------------

    def execute_run(self, token: str, fields, reps) -> RunRecord:
        """Atomic check-then-commit: gate, observe, deduct, append.

        The balance may go to zero or negative on the admitted run; that
        blocks subsequent runs until the next accrual.
        """
        with self.lock:
            account = self.account(token)
            if self.clock.current_week < 1:
                raise RunsNotOpenError("runs open in week 1; the clock is at week 0")
            if not self.can_run(account):
                raise RunRejectedError(
                    f"balance is {account.balance}; runs need a positive balance")
            point = validate_point_fields(
                fields if isinstance(fields, dict) else fields.to_dict(),
                self.config.max_input)
            reps = validate_reps(reps)
            obs = observe(point, week=self.clock.current_week, reps=reps,
                          rng=self.rng, schedule=self.config.schedule)
            record = RunRecord(
                run_id=len(account.runs) + 1,
                week=self.clock.current_week,
                point=point,
                reps=reps,
                cost=replicate_cost(reps),
                yields=obs.noisy_yields,
            )
            account.runs.append(record)
            account.balance -= record.cost
            return record
