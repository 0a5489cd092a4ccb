"""Variance-based sensitivity analysis and noise-variance tracking.

Sobol first-order (main) and total effects come from the standard
pick-freeze Monte Carlo scheme with two independent Latin hypercube
matrices A and B: for each input i, A_B^i is A with column i swapped from
B, and

    main_i  ~ mean(f(B) * (f(A_B^i) - f(A))) / V
    total_i ~ mean((f(A) - f(A_B^i))^2) / (2 V)

with V the variance of the pooled f(A), f(B) evaluations. The input
measure is independent uniforms over the supplied bounds.

Partial dependence of input j is the surface averaged over the other
inputs (Monte Carlo background sample) on a grid along j.

variance_over_time pools within-point replicate variances per week and
fits a fixed-period sinusoid (offset + amplitude/phase via the linear
cos/sin parametrization) by least squares.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rsm import latin_hypercube


def _as_fn(surface):
    """Accept a plain vectorized function or a fitted GP model."""
    if hasattr(surface, "predict"):
        return lambda X: surface.predict(X)[0]
    return surface


@dataclass
class SobolResult:
    main: np.ndarray
    total: np.ndarray
    variance: float
    main_se: np.ndarray       # Monte Carlo standard errors of the main effects
    undefined: bool = False   # total variance was (numerically) zero


def sobol_indices(surface, bounds, d: int | None = None, n: int = 4096,
                  rng: np.random.Generator | None = None) -> SobolResult:
    """Pick-freeze estimates of main and total Sobol indices.

    ``bounds`` is a (lo, hi) pair of scalars or length-d arrays; ``d``
    is required when bounds are scalars and the surface is a plain
    function.
    """
    fn = _as_fn(surface)
    rng = rng or np.random.default_rng(0)
    lo, hi = bounds
    lo = np.asarray(lo, dtype=float)
    if lo.ndim == 0:
        if d is None:
            raise ValueError("scalar bounds need an explicit dimension d")
    else:
        d = len(lo)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (d,))
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (d,))

    A = latin_hypercube(n, d, (lo, hi), rng)
    B = latin_hypercube(n, d, (lo, hi), rng)
    fA = np.asarray(fn(A), dtype=float)
    fB = np.asarray(fn(B), dtype=float)
    pooled = np.concatenate([fA, fB])
    V = float(np.var(pooled))
    scale = float(np.mean(pooled ** 2)) + 1e-300
    if V <= 1e-12 * scale:
        zeros = np.zeros(d)
        return SobolResult(main=zeros, total=zeros.copy(), variance=V,
                           main_se=zeros.copy(), undefined=True)

    main = np.empty(d)
    total = np.empty(d)
    main_se = np.empty(d)
    for i in range(d):
        ABi = A.copy()
        ABi[:, i] = B[:, i]
        fABi = np.asarray(fn(ABi), dtype=float)
        prod = fB * (fABi - fA)
        main[i] = float(prod.mean()) / V
        main_se[i] = float(prod.std(ddof=1)) / math.sqrt(n) / V
        total[i] = float(((fA - fABi) ** 2).mean()) / (2.0 * V)
    return SobolResult(main=main, total=total, variance=V, main_se=main_se)


@dataclass
class PartialDependence:
    grid: np.ndarray      # (d, n_grid) coordinate values
    values: np.ndarray    # (d, n_grid) averaged surface


def partial_dependence(surface, bounds, d: int | None = None, n_grid: int = 50,
                       n_background: int = 512,
                       rng: np.random.Generator | None = None) -> PartialDependence:
    """Average the surface over all-but-one input on a grid along each input."""
    fn = _as_fn(surface)
    rng = rng or np.random.default_rng(0)
    lo, hi = bounds
    lo = np.asarray(lo, dtype=float)
    if lo.ndim == 0:
        if d is None:
            raise ValueError("scalar bounds need an explicit dimension d")
    else:
        d = len(lo)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (d,))
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (d,))

    background = latin_hypercube(n_background, d, (lo, hi), rng)
    grid = np.linspace(lo, hi, n_grid).T        # (d, n_grid)
    values = np.empty((d, n_grid))
    for j in range(d):
        for t in range(n_grid):
            Xt = background.copy()
            Xt[:, j] = grid[j, t]
            values[j, t] = float(np.mean(fn(Xt)))
    return PartialDependence(grid=grid, values=values)


@dataclass
class VarianceOverTime:
    weeks: np.ndarray         # weeks with at least one replicated point
    variances: np.ndarray     # pooled within-point variance per week
    dofs: np.ndarray          # pooled degrees of freedom per week
    offset: float | None      # sinusoid offset (None if the fit was refused)
    amplitude: float | None
    peak_week: float | None   # where the fitted sinusoid peaks (mod period)
    period: float
    fitted: np.ndarray | None  # fitted variance at each reported week
    refused: str | None = None


def _runs_as_tuples(runs):
    out = []
    for r in runs:
        if isinstance(r, tuple):
            week, point, ys = r
        else:
            week, point, ys = r.week, r.point, r.yields
        key = tuple(point.to_array()) if hasattr(point, "to_array") else tuple(np.ravel(point))
        out.append((int(week), key, np.asarray(ys, dtype=float)))
    return out


def variance_over_time(runs, period: float = 10.0,
                       min_weeks: int = 3) -> VarianceOverTime:
    """Per-week pooled replicate variances plus a fixed-period sinusoid fit.

    ``runs`` is an iterable of run records (week, point, yields) — the
    engine's RunRecord works directly. Weeks contribute through points
    observed with at least two replicates (within-point deviations are
    pooled across points and runs). With fewer than ``min_weeks`` usable
    weeks the sinusoid fit is refused but the per-week estimates are
    still returned.
    """
    by_week: dict = {}
    for week, key, ys in _runs_as_tuples(runs):
        by_week.setdefault(week, {}).setdefault(key, []).append(ys)

    weeks, variances, dofs = [], [], []
    for week in sorted(by_week):
        ss = 0.0
        df = 0
        for chunks in by_week[week].values():
            ys = np.concatenate(chunks)
            if len(ys) >= 2:
                ss += float(((ys - ys.mean()) ** 2).sum())
                df += len(ys) - 1
        if df > 0:
            weeks.append(week)
            variances.append(ss / df)
            dofs.append(df)
    weeks = np.array(weeks, dtype=float)
    variances = np.array(variances)
    dofs = np.array(dofs, dtype=float)

    if len(weeks) < min_weeks:
        return VarianceOverTime(
            weeks=weeks, variances=variances, dofs=dofs,
            offset=None, amplitude=None, peak_week=None, period=period,
            fitted=None,
            refused=f"need at least {min_weeks} weeks with replicates, have {len(weeks)}")

    # offset + a cos + b sin is linear in (offset, a, b)
    w = 2.0 * math.pi * weeks / period
    X = np.column_stack([np.ones_like(weeks), np.cos(w), np.sin(w)])
    (c, a, b), *_ = np.linalg.lstsq(X, variances, rcond=None)
    amplitude = float(math.hypot(a, b))
    peak = float((math.atan2(b, a) * period / (2.0 * math.pi)) % period)
    return VarianceOverTime(
        weeks=weeks, variances=variances, dofs=dofs,
        offset=float(c), amplitude=amplitude, peak_week=peak, period=period,
        fitted=X @ np.array([c, a, b]))
