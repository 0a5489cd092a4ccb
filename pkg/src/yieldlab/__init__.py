"""yieldlab: a sequential-experiment yield optimization game and solver kit.

A blackbox nutrient-yield simulator with weekly-varying noise, a budgeted
multi-player game engine with an HTTP portal and leaderboards, a classical
response-surface toolkit, Gaussian-process Bayesian optimization with
expected improvement, variance-based sensitivity analysis, and scripted
agents that play full seasons.
"""

from .engine import (
    Game,
    GameClock,
    GameConfig,
    PlayerAccount,
    RunRecord,
    replicate_cost,
    seed_initial_design,
)
from .simulate import (
    NUTRIENTS,
    InputPoint,
    NoiseSchedule,
    Observation,
    make_rng,
    noise_variance,
    observe,
    true_yield,
    true_yield_batch,
)

__version__ = "0.1.0"

__all__ = [
    "Game",
    "GameClock",
    "GameConfig",
    "InputPoint",
    "NoiseSchedule",
    "NUTRIENTS",
    "Observation",
    "PlayerAccount",
    "RunRecord",
    "make_rng",
    "noise_variance",
    "observe",
    "replicate_cost",
    "seed_initial_design",
    "true_yield",
    "true_yield_batch",
    "__version__",
]
