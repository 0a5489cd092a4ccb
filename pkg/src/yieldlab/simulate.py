"""Blackbox yield simulator.

The deterministic yield surface over seven nutrient inputs (one of which,
Nx, is a decoy that never enters the response), the week-indexed noise
schedule, and the stochastic observation process that the game engine
samples from.

Randomness comes from numpy's Philox bit generator (Philox4x64-128), a
counter-based, seedable generator: replays of a seeded game are
bit-reproducible and the full generator state round-trips through
snapshots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, FieldValidationError

#: Canonical input order, used everywhere (forms, exports, design matrices).
NUTRIENTS = ("N", "P", "K", "Na", "Ca", "Mg", "Nx")

MIN_REPS = 1
MAX_REPS = 10


@dataclass(frozen=True)
class InputPoint:
    """One experiment coordinate: seven nonnegative nutrient levels.

    Zero is permitted here (the surface is well defined at the origin);
    the player-facing API additionally requires strict positivity.
    """

    N: float
    P: float
    K: float
    Na: float
    Ca: float
    Mg: float
    Nx: float

    def __post_init__(self):
        for name in NUTRIENTS:
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise DomainError(f"{name} must be a real number, got {v!r}")
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite, got {v!r}")
            if v < 0:
                raise DomainError(f"{name} must be >= 0, got {v!r}")
            object.__setattr__(self, name, float(v))

    @classmethod
    def from_array(cls, x) -> "InputPoint":
        x = np.asarray(x, dtype=float)
        if x.shape != (7,):
            raise DomainError(f"expected 7 coordinates, got shape {x.shape}")
        return cls(*(float(v) for v in x))

    @classmethod
    def from_dict(cls, d) -> "InputPoint":
        missing = [n for n in NUTRIENTS if n not in d]
        if missing:
            raise DomainError(f"missing coordinates: {', '.join(missing)}")
        return cls(*(float(d[n]) for n in NUTRIENTS))

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in NUTRIENTS], dtype=float)

    def to_dict(self) -> dict:
        return {n: getattr(self, n) for n in NUTRIENTS}


def true_yield(point) -> float:
    """Deterministic yield at a point. Strictly positive; independent of Nx.

    Accepts an InputPoint, a mapping, or a length-7 array in canonical
    order.
    """
    if isinstance(point, InputPoint):
        p = point
    elif isinstance(point, dict):
        p = InputPoint.from_dict(point)
    else:
        p = InputPoint.from_array(point)
    l1 = (0.015 + 0.0005 * p.N + 0.001 * p.P + 1.0 / ((p.N + 5.0) * (p.P + 2.0))
          + 0.001 * p.K + 0.1 / (p.K + 2.0))
    l2 = (0.001 * ((2.0 + p.K + 0.5 * p.Na) / (p.Ca + 1.0))
          + 0.004 * ((p.Ca + 1.0) / (2.0 + p.K + 0.5 * p.Na)))
    l3 = 0.02 / (p.Mg + 1.0)
    return 1.0 / (l1 + l2 + l3)


def true_yield_batch(X) -> np.ndarray:
    """Vectorized yield over an (n, 7) array in canonical input order."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != 7:
        raise DomainError(f"expected an (n, 7) array, got shape {X.shape}")
    if not np.all(np.isfinite(X)) or np.any(X < 0):
        raise DomainError("all coordinates must be finite and >= 0")
    N, P, K, Na, Ca, Mg = (X[:, i] for i in range(6))
    l1 = (0.015 + 0.0005 * N + 0.001 * P + 1.0 / ((N + 5.0) * (P + 2.0))
          + 0.001 * K + 0.1 / (K + 2.0))
    l2 = (0.001 * ((2.0 + K + 0.5 * Na) / (Ca + 1.0))
          + 0.004 * ((Ca + 1.0) / (2.0 + K + 0.5 * Na)))
    l3 = 0.02 / (Mg + 1.0)
    return 1.0 / (l1 + l2 + l3)


@dataclass(frozen=True)
class NoiseSchedule:
    """Parameters of the week-indexed observation-noise variance sinusoid.

    variance(w) = base_variance + amplitude * (cos(2*pi*(w - start_week)/period_weeks) + 1)

    so variance stays in [base_variance, base_variance + 2*amplitude],
    peaking at weeks congruent to start_week mod period_weeks.
    """

    base_variance: float = 0.1
    amplitude: float = 0.05
    period_weeks: int = 10
    start_week: int = 1

    def to_dict(self) -> dict:
        return {
            "base_variance": self.base_variance,
            "amplitude": self.amplitude,
            "period_weeks": self.period_weeks,
            "start_week": self.start_week,
        }

    @classmethod
    def from_dict(cls, d) -> "NoiseSchedule":
        return cls(
            base_variance=float(d["base_variance"]),
            amplitude=float(d["amplitude"]),
            period_weeks=int(d["period_weeks"]),
            start_week=int(d["start_week"]),
        )


def noise_variance(schedule: NoiseSchedule, week: int) -> float:
    """Observation-noise variance for the given game week."""
    if week < 0:
        raise DomainError(f"week must be >= 0, got {week}")
    phase = 2.0 * math.pi * (week - schedule.start_week) / schedule.period_weeks
    return schedule.base_variance + schedule.amplitude * (math.cos(phase) + 1.0)


@dataclass(frozen=True)
class Observation:
    """One stochastic evaluation: replicate noisy yields around the true yield.

    true_yield is kept server-side for de-noised leaderboards and is never
    exposed to players.
    """

    week: int
    point: InputPoint
    true_yield: float
    noisy_yields: tuple


def observe(point: InputPoint, week: int, reps: int, rng: np.random.Generator,
            schedule: NoiseSchedule = NoiseSchedule()) -> Observation:
    """Draw replicate noisy yields at a point under the week's noise variance.

    Draws consume the supplied generator deterministically; callers own
    serialization of a shared stream.
    """
    if not isinstance(reps, int) or isinstance(reps, bool):
        raise FieldValidationError("reps", f"reps must be an integer, got {reps!r}")
    if not (MIN_REPS <= reps <= MAX_REPS):
        raise FieldValidationError(
            "reps", f"reps must be between {MIN_REPS} and {MAX_REPS}, got {reps}")
    if not isinstance(point, InputPoint):
        point = InputPoint.from_dict(point) if isinstance(point, dict) else InputPoint.from_array(point)
    mu = true_yield(point)
    sd = math.sqrt(noise_variance(schedule, week))
    noise = rng.normal(0.0, sd, size=reps)
    return Observation(
        week=week,
        point=point,
        true_yield=mu,
        noisy_yields=tuple(float(mu + e) for e in noise),
    )


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for a game. Distinct streams are independent."""
    bg = np.random.Philox(key=seed)
    if stream:
        bg = bg.jumped(stream)
    return np.random.Generator(bg)


def rng_state_to_jsonable(rng: np.random.Generator) -> dict:
    """Serialize the full Philox state (arrays become lists of ints)."""
    st = rng.bit_generator.state
    return {
        "bit_generator": st["bit_generator"],
        "counter": [int(v) for v in st["state"]["counter"]],
        "key": [int(v) for v in st["state"]["key"]],
        "buffer": [int(v) for v in st["buffer"]],
        "buffer_pos": int(st["buffer_pos"]),
        "has_uint32": int(st["has_uint32"]),
        "uinteger": int(st["uinteger"]),
    }


def rng_from_jsonable(d: dict) -> np.random.Generator:
    """Rebuild a generator from its serialized state."""
    if d.get("bit_generator") != "Philox":
        raise ValueError(f"unsupported bit generator: {d.get('bit_generator')!r}")
    bg = np.random.Philox()
    bg.state = {
        "bit_generator": "Philox",
        "state": {
            "counter": np.array(d["counter"], dtype=np.uint64),
            "key": np.array(d["key"], dtype=np.uint64),
        },
        "buffer": np.array(d["buffer"], dtype=np.uint64),
        "buffer_pos": int(d["buffer_pos"]),
        "has_uint32": int(d["has_uint32"]),
        "uinteger": int(d["uinteger"]),
    }
    return np.random.Generator(bg)
