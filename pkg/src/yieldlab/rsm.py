"""Classical response-surface toolkit.

Polynomial least-squares fits with a small term language, backward
stepwise selection under BIC, steepest-ascent paths, second-order ridge
analysis, and Latin hypercube designs.

Terms are strings: ``"1"`` (intercept), ``"N"`` (main effect),
``"N:P"`` (two-way interaction), ``"N^2"`` (quadratic). Data is a mapping
from variable name to a 1-D numpy array.

BIC convention: ``n*log(RSS/n) + k*log(n)`` with k the number of
estimated coefficients including the intercept. Additive constants are
dropped; they cancel in comparisons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CollinearityError, ZeroGradientError

_RANK_TOL = 1e-10


def parse_term(term: str) -> dict:
    """Term string -> {variable: power}. The intercept parses to {}."""
    if term == "1":
        return {}
    if "^2" in term:
        name = term[: term.index("^2")]
        return {name: 2}
    if ":" in term:
        a, b = term.split(":")
        return {a: 1, b: 1}
    return {term: 1}


def term_names(term: str) -> set:
    return set(parse_term(term))


def first_order_terms(names) -> list:
    return ["1"] + list(names)


def second_order_terms(names) -> list:
    """Full quadratic model: intercept, mains, quadratics, pairwise interactions."""
    names = list(names)
    terms = ["1"] + names + [f"{n}^2" for n in names]
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            terms.append(f"{names[i]}:{names[j]}")
    return terms


def _column(data, term: str, n: int) -> np.ndarray:
    powers = parse_term(term)
    col = np.ones(n)
    for name, p in powers.items():
        col = col * np.asarray(data[name], dtype=float) ** p
    return col


def build_design(data, terms) -> np.ndarray:
    """Assemble the (n, k) design matrix for the given terms."""
    n = len(next(iter(data.values())))
    return np.column_stack([_column(data, t, n) for t in terms])


def _sequential_alias(X: np.ndarray, terms) -> tuple:
    """R-style sequential pivoting: walk columns in order, aliasing any
    column that lies (numerically) in the span of the kept ones.

    Returns (kept term indices, aliased term names).
    """
    n = X.shape[0]
    Q = np.empty((n, 0))
    kept, aliased = [], []
    for j, t in enumerate(terms):
        col = X[:, j]
        r = col - Q @ (Q.T @ col) if Q.shape[1] else col.copy()
        scale = np.linalg.norm(col)
        if scale == 0 or np.linalg.norm(r) <= _RANK_TOL * max(scale, 1.0):
            aliased.append(t)
        else:
            kept.append(j)
            Q = np.column_stack([Q, r / np.linalg.norm(r)])
    return kept, aliased


@dataclass
class LinearFit:
    """A least-squares polynomial fit plus the data it was fit on.

    Keeping the data around lets stepwise selection refit submodels
    without threading extra arguments.
    """

    terms: tuple
    coef: np.ndarray
    n: int
    rss: float
    sigma2: float
    bic: float
    aliased: tuple = ()
    data: dict = field(default_factory=dict, repr=False)
    y: np.ndarray = field(default=None, repr=False)

    @property
    def k(self) -> int:
        return len(self.terms)

    def coef_for(self, term: str) -> float:
        return float(self.coef[self.terms.index(term)])

    @property
    def intercept(self) -> float:
        return self.coef_for("1") if "1" in self.terms else 0.0

    def main_effects(self) -> dict:
        """{name: coefficient} over the main-effect terms in the fit."""
        return {t: self.coef_for(t) for t in self.terms
                if t != "1" and parse_term(t) == {t: 1}}

    def predict(self, data) -> np.ndarray:
        return build_design(data, self.terms) @ self.coef

    def residuals(self) -> np.ndarray:
        return self.y - self.predict(self.data)


def _bic(n: int, rss: float, k: int) -> float:
    return n * math.log(max(rss, 1e-300) / n) + k * math.log(n)


def fit_ols(data, y, terms, on_alias: str = "error") -> LinearFit:
    """Least-squares fit of the given terms.

    Solved via numpy's SVD-based lstsq, which is numerically stable on
    poorly scaled designs. Rank deficiency either raises
    CollinearityError naming the aliased terms (``on_alias="error"``) or
    drops them R-style (``on_alias="drop"``).
    """
    y = np.asarray(y, dtype=float)
    terms = list(terms)
    n = len(y)
    X = build_design(data, terms)
    kept, aliased = _sequential_alias(X, terms)
    if aliased:
        if on_alias == "error":
            raise CollinearityError(
                aliased, f"design is rank deficient; aliased terms: {', '.join(aliased)}")
        terms = [terms[j] for j in kept]
        X = X[:, kept]
    if n <= X.shape[1]:
        # saturated or worse: still solvable, but sigma2 is undefined
        pass
    coef, _, _, _ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    rss = float(resid @ resid)
    k = X.shape[1]
    dof = n - k
    sigma2 = rss / dof if dof > 0 else float("nan")
    return LinearFit(
        terms=tuple(terms),
        coef=coef,
        n=n,
        rss=rss,
        sigma2=sigma2,
        bic=_bic(n, rss, k),
        aliased=tuple(aliased),
        data=dict(data),
        y=y,
    )


def _droppable(term: str, terms, hierarchy: bool) -> bool:
    if term == "1":
        return False
    if not hierarchy:
        return True
    powers = parse_term(term)
    if len(powers) == 1 and list(powers.values())[0] == 1:
        name = next(iter(powers))
        for other in terms:
            if other != term and name in term_names(other):
                return False
    return True


def stepwise_bic_backward(fit: LinearFit, hierarchy: bool = True) -> LinearFit:
    """Backward elimination: repeatedly drop the single term whose removal
    most decreases BIC; stop when no removal decreases it.

    The intercept is never dropped. With ``hierarchy`` (weak heredity,
    the default) a main effect survives while any interaction or
    quadratic containing it survives.
    """
    current = fit
    while True:
        best = None
        for t in current.terms:
            if not _droppable(t, current.terms, hierarchy):
                continue
            reduced = [u for u in current.terms if u != t]
            cand = fit_ols(current.data, current.y, reduced, on_alias="drop")
            if cand.bic < current.bic - 1e-12 and (best is None or cand.bic < best.bic):
                best = cand
        if best is None:
            return current
        current = best


@dataclass
class AscentPath:
    """Steepest-ascent probe points with clipping flags."""

    points: list            # list of {name: value}
    clipped: list           # per-point bool: some coordinate hit the floor
    direction: dict         # unit ascent direction over the active names


def steepest_ascent_path(fit: LinearFit, x0: dict, steps: int = 6,
                         step_size: float = 1.0, fill: str = "hold",
                         lower: float = 0.0, rng=None,
                         fill_bounds: dict | None = None) -> AscentPath:
    """Points along x0 + t*step_size*b/||b|| in the fit's active main effects.

    The fit must be first order (no quadratics or interactions). Inactive
    coordinates (present in x0 but not in the fit) are held at their x0
    value, or with ``fill="lhs"`` filled by a Latin hypercube over
    ``fill_bounds`` (name -> (lo, hi)), matching the practice of pairing
    ascent settings of the active inputs with space-filling settings of
    the rest. Coordinates that would go below ``lower`` are clipped there
    and the point is flagged.
    """
    for t in fit.terms:
        p = parse_term(t)
        if len(p) > 1 or any(v > 1 for v in p.values()):
            raise ValueError(f"steepest ascent needs a first-order fit; found term {t!r}")
    effects = fit.main_effects()
    names = list(effects)
    b = np.array([effects[n] for n in names])
    norm = float(np.linalg.norm(b))
    # numerically-zero gradient: coefficients at rounding level for the data
    scale = max(1.0, float(np.max(np.abs(fit.y)))) if fit.y is not None else 1.0
    if norm <= 1e-12 * scale:
        raise ZeroGradientError("all main-effect coefficients are zero; no ascent direction")
    unit = b / norm

    inactive = [n for n in x0 if n not in names]
    if fill == "lhs":
        if rng is None:
            raise ValueError("fill='lhs' needs an rng")
        bounds = fill_bounds or {}
        lo = np.array([bounds.get(n, (lower, x0[n] * 2 if x0[n] > lower else lower + 1.0))[0]
                       for n in inactive])
        hi = np.array([bounds.get(n, (lower, x0[n] * 2 if x0[n] > lower else lower + 1.0))[1]
                       for n in inactive])
        fills = latin_hypercube(steps, len(inactive), (lo, hi), rng) if inactive else None
    elif fill != "hold":
        raise ValueError(f"unknown fill mode {fill!r}")

    points, clipped = [], []
    for i in range(1, steps + 1):
        pt = dict(x0)
        for j, n in enumerate(names):
            pt[n] = x0[n] + i * step_size * unit[j]
        if fill == "lhs" and inactive:
            for j, n in enumerate(inactive):
                pt[n] = float(fills[i - 1, j])
        clip = False
        for n, v in pt.items():
            if v < lower:
                pt[n] = lower
                clip = True
        points.append(pt)
        clipped.append(clip)
    return AscentPath(points=points, clipped=clipped,
                      direction=dict(zip(names, unit.tolist())))


@dataclass
class TracePoint:
    mu: float
    x: np.ndarray
    radius: float
    predicted: float
    singular: bool = False


@dataclass
class QuadraticCanonical:
    """Canonical analysis of a fitted second-order surface."""

    names: tuple
    B: np.ndarray           # symmetric: quadratics on diagonal, half interactions off
    b: np.ndarray           # linear coefficients
    intercept: float
    x_s: np.ndarray         # stationary point, solves 2 B x = -b
    eigenvalues: np.ndarray
    kind: str               # "maximum" | "minimum" | "saddle"
    trace: list             # TracePoints over the mu grid (singular ones flagged)
    x_s_least_squares: bool = False   # B was singular; x_s is the min-norm solution

    def predicted_at(self, x: np.ndarray) -> float:
        return float(self.intercept + self.b @ x + x @ self.B @ x)


def ridge_analysis(fit: LinearFit, n_grid: int = 50) -> QuadraticCanonical:
    """Stationary point, eigenstructure, and ridge trace of a second-order fit.

    The trace evaluates x(mu) = -1/2 (B - mu I)^{-1} b over a grid of mu
    values bracketing the eigenvalues (n_grid per side); grid points where
    B - mu I is numerically singular are flagged and skipped.
    """
    names = sorted({n for t in fit.terms for n in term_names(t)})
    d = len(names)
    idx = {n: i for i, n in enumerate(names)}
    B = np.zeros((d, d))
    b = np.zeros(d)
    has_quad = False
    for t in fit.terms:
        powers = parse_term(t)
        c = fit.coef_for(t)
        if not powers:
            continue
        if len(powers) == 1:
            (name, p), = powers.items()
            if p == 1:
                b[idx[name]] = c
            else:
                B[idx[name], idx[name]] = c
                has_quad = True
        else:
            (n1, n2) = list(powers)
            B[idx[n1], idx[n2]] += c / 2.0
            B[idx[n2], idx[n1]] += c / 2.0
            has_quad = True
    if not has_quad:
        raise ValueError("ridge analysis needs a second-order fit (no quadratic terms found)")

    eig = np.linalg.eigvalsh(B)
    least_squares = False
    try:
        x_s = np.linalg.solve(2.0 * B, -b)
    except np.linalg.LinAlgError:
        x_s = np.linalg.lstsq(2.0 * B, -b, rcond=None)[0]
        least_squares = True
    tol = 1e-10 * max(1.0, float(np.max(np.abs(eig))))
    if np.all(eig < -tol):
        kind = "maximum"
    elif np.all(eig > tol):
        kind = "minimum"
    else:
        kind = "saddle"

    lo, hi = float(eig.min()), float(eig.max())
    spread = max(hi - lo, float(np.max(np.abs(eig))), 1.0)
    grid = np.concatenate([
        lo - spread * np.linspace(2.0, 0.02, n_grid),
        hi + spread * np.linspace(0.02, 2.0, n_grid),
    ])
    trace = []
    intercept = fit.intercept
    for mu in grid:
        shifted = B - mu * np.eye(d)
        sig = float(np.min(np.abs(eig - mu)))
        if sig < 1e-12 * spread:
            trace.append(TracePoint(mu=float(mu), x=np.full(d, np.nan),
                                    radius=float("nan"), predicted=float("nan"),
                                    singular=True))
            continue
        x = np.linalg.solve(shifted, -0.5 * b)
        pred = intercept + b @ x + x @ B @ x
        trace.append(TracePoint(mu=float(mu), x=x, radius=float(np.linalg.norm(x)),
                                predicted=float(pred)))
    return QuadraticCanonical(
        names=tuple(names), B=B, b=b, intercept=intercept, x_s=x_s,
        eigenvalues=eig, kind=kind, trace=trace, x_s_least_squares=least_squares)


def latin_hypercube(n: int, d: int, bounds, rng: np.random.Generator,
                    maximin: int = 1) -> np.ndarray:
    """n-point Latin hypercube in d dimensions over the given bounds.

    Each column places exactly one point per equal-probability stratum,
    jittered uniformly within the stratum. ``bounds`` is a (lo, hi) pair
    of scalars or length-d arrays. With ``maximin=m`` the best of m
    candidate designs by minimum pairwise distance (in the unit cube) is
    kept; the first candidate consumes the same draws as the plain
    design, so the maximin pick never has a smaller separation than the
    plain one under a matched seed.
    """
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    lo, hi = bounds
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (d,))
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (d,))

    def one() -> np.ndarray:
        cols = [rng.permutation(n) for _ in range(d)]
        u = (np.column_stack(cols) + rng.uniform(size=(n, d))) / n
        return u

    if maximin <= 1:
        return lo + one() * (hi - lo)

    best, best_sep = None, -1.0
    for _ in range(maximin):
        u = one()
        if n == 1:
            sep = float("inf")
        else:
            diff = u[:, None, :] - u[None, :, :]
            dist = np.sqrt((diff ** 2).sum(axis=2))
            np.fill_diagonal(dist, np.inf)
            sep = float(dist.min())
        if sep > best_sep:
            best, best_sep = u, sep
    return lo + best * (hi - lo)
