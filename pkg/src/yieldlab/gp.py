"""Gaussian-process surrogate with expected improvement.

Model: zero-mean GP (after output centering/scaling) with an anisotropic
squared-exponential kernel plus a nugget,

    k(x, x') = s2 * exp(-1/2 * sum_d ((x_d - x'_d)/theta_d)^2),
    Cov(y_i, y_j) = k(x_i, x_j) + g * 1[i == j],

inputs standardized to the unit cube using the training bounds and the
outputs centered and scaled (both undone on prediction). Hyperparameters
(theta, s2, g) maximize the marginal log-likelihood via multi-start
L-BFGS-B in log space with analytic gradients.

Replicated rows are handled exactly: with unique points u_j, replicate
counts r_j, group means ybar_j and pooled within-group sum of squares W,
the full-data marginal log-likelihood decomposes as

    ll = -1/2 [ N log 2pi + (N - m) log g + W/g + sum_j log r_j
               + log|K_m| + ybar' K_m^{-1} ybar ],
    K_m = s2 C_u + g diag(1/r_j),

so fitting and prediction cost O(m^3) rather than O(N^3). A test checks
this identity against the dense N x N construction.

Everything is oriented for minimization (the improvement is measured
below the incumbent); callers maximizing a response negate it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular
from scipy.optimize import minimize
from scipy.special import ndtr

from .errors import GPFitError
from .rsm import latin_hypercube

_SQRT_2PI = math.sqrt(2.0 * math.pi)
_JITTER_LADDER = (0.0, 1e-8, 1e-6, 1e-4)


def _norm_pdf(z):
    return np.exp(-0.5 * z * z) / _SQRT_2PI


def _sq_dists_per_dim(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    # (d, nA, nB) squared coordinate differences
    return (A[:, None, :] - B[None, :, :]) ** 2


def _corr(A: np.ndarray, B: np.ndarray, theta: np.ndarray) -> np.ndarray:
    d2 = _sq_dists_per_dim(A, B) / (theta[None, None, :] ** 2)
    return np.exp(-0.5 * d2.sum(axis=2))


@dataclass
class GPConfig:
    n_starts: int = 8
    max_iter: int = 100
    nugget_floor: float = 1e-8        # in standardized-output variance units
    theta_bounds: tuple = (0.05, 20.0)
    s2_bounds: tuple = (1e-3, 1e3)
    nugget_cap: float = 10.0
    seed: int = 0


@dataclass
class GPModel:
    """Fitted surrogate: hyperparameters, pooled training data, and the
    Cholesky factorization needed for O(m^2) predictions."""

    x_lo: np.ndarray
    x_hi: np.ndarray
    y_mean: float
    y_scale: float
    U: np.ndarray            # unique standardized inputs (m, d)
    ybar: np.ndarray         # standardized group means (m,)
    counts: np.ndarray       # replicates per unique point (m,)
    theta: np.ndarray        # lengthscales per dimension (unit-cube units)
    s2: float                # signal variance (standardized units)
    g: float                 # nugget variance (standardized units)
    chol: np.ndarray         # lower Cholesky factor of K_m
    alpha: np.ndarray        # K_m^{-1} ybar
    loglik: float
    start_logliks: tuple = ()
    jitter: float = 0.0
    X_raw: np.ndarray = field(default=None, repr=False)
    y_raw: np.ndarray = field(default=None, repr=False)

    @property
    def noise_variance(self) -> float:
        """Fitted observation-noise variance in original output units."""
        return self.g * self.y_scale ** 2

    @property
    def prior_sd(self) -> float:
        """Prior predictive standard deviation in original output units."""
        return math.sqrt(self.s2) * self.y_scale

    def standardize(self, X: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(np.asarray(X, dtype=float)) - self.x_lo) / (self.x_hi - self.x_lo)

    def predict(self, X, include_noise: bool = False):
        """Predictive mean and standard deviation at the given inputs.

        Returns (mu, sd) arrays; by default sd is the latent (noise-free)
        standard deviation.
        """
        Z = self.standardize(X)
        k = self.s2 * _corr(Z, self.U, self.theta)       # (n, m)
        mu = k @ self.alpha
        v = solve_triangular(self.chol, k.T, lower=True)  # (m, n)
        var = self.s2 - (v ** 2).sum(axis=0)
        if include_noise:
            var = var + self.g
        var = np.clip(var, 0.0, None)
        return (self.y_mean + self.y_scale * mu,
                self.y_scale * np.sqrt(var))

    def predict_mean_grad(self, x) -> np.ndarray:
        """Analytic gradient of the predictive mean at one point
        (original units in and out)."""
        x = np.asarray(x, dtype=float).reshape(1, -1)
        z = self.standardize(x)                           # (1, d)
        k = self.s2 * _corr(z, self.U, self.theta)        # (1, m)
        diff = (z[0][None, :] - self.U) / (self.theta ** 2)   # (m, d)
        grad_std = -(k[0][:, None] * diff * self.alpha[:, None]).sum(axis=0)
        return self.y_scale * grad_std / (self.x_hi - self.x_lo)

    def predict_one_with_grads(self, x):
        """(mu, sd, dmu/dx, dsd/dx) at one point, all in original units.

        Used by the acquisition polish; dsd is zero where sd is zero.
        """
        x = np.asarray(x, dtype=float).reshape(1, -1)
        z = self.standardize(x)
        k = (self.s2 * _corr(z, self.U, self.theta))[0]   # (m,)
        dk = -k[:, None] * (z[0][None, :] - self.U) / (self.theta ** 2)  # (m, d)
        mu_std = float(k @ self.alpha)
        dmu_std = dk.T @ self.alpha
        Kik = cho_solve((self.chol, True), k)
        var_std = max(self.s2 - float(k @ Kik), 0.0)
        sd_std = math.sqrt(var_std)
        if sd_std > 0:
            dsd_std = -(dk.T @ Kik) / sd_std
        else:
            dsd_std = np.zeros_like(dmu_std)
        widths = self.x_hi - self.x_lo
        return (self.y_mean + self.y_scale * mu_std,
                self.y_scale * sd_std,
                self.y_scale * dmu_std / widths,
                self.y_scale * dsd_std / widths)

    def training_points(self) -> np.ndarray:
        """Unique training inputs in original units, aligned with ybar/U."""
        return self.x_lo + self.U * (self.x_hi - self.x_lo)

    def training_means(self) -> np.ndarray:
        """Per-point replicate means in original units, aligned with U."""
        return self.y_mean + self.y_scale * self.ybar

    def loo_means(self) -> np.ndarray:
        """Leave-one-out predictive means, aligned with the unique training
        points U, from the closed-form identity
        mu_-j = ybar_j - [K^{-1} ybar]_j / [K^{-1}]_jj."""
        m = len(self.ybar)
        Ki = cho_solve((self.chol, True), np.eye(m))
        loo_std = self.ybar - self.alpha / np.diag(Ki)
        return self.y_mean + self.y_scale * loo_std


def _pool_replicates(X: np.ndarray, y: np.ndarray):
    U, inverse = np.unique(X, axis=0, return_inverse=True)
    m = len(U)
    counts = np.bincount(inverse, minlength=m).astype(float)
    sums = np.bincount(inverse, weights=y, minlength=m)
    ybar = sums / counts
    W = float(((y - ybar[inverse]) ** 2).sum())
    return U, ybar, counts, W


def _chol_with_ladder(K: np.ndarray, s2: float):
    for jitter in _JITTER_LADDER:
        try:
            Kj = K if jitter == 0.0 else K + jitter * s2 * np.eye(len(K))
            c, _ = cho_factor(Kj, lower=True)
            return np.tril(c), jitter
        except np.linalg.LinAlgError:
            continue
    return None, None


def _pooled_loglik(params_log, U, ybar, counts, W, N, want_grad=True):
    """Marginal log-likelihood (and gradient in log-parameter space) of the
    full replicated data via the pooled decomposition."""
    d = U.shape[1]
    theta = np.exp(params_log[:d])
    s2 = float(np.exp(params_log[d]))
    g = float(np.exp(params_log[d + 1]))
    m = len(U)

    C = _corr(U, U, theta)
    K = s2 * C + g * np.diag(1.0 / counts)
    L, jitter = _chol_with_ladder(K, s2)
    if L is None:
        bad = -1e25
        return (bad, np.zeros_like(params_log)) if want_grad else bad

    alpha = cho_solve((L, True), ybar)
    logdet = 2.0 * float(np.log(np.diag(L)).sum())
    ll = -0.5 * (
        N * math.log(2.0 * math.pi)
        + (N - m) * math.log(g)
        + W / g
        + float(np.log(counts).sum())
        + logdet
        + float(ybar @ alpha)
    )
    if not want_grad:
        return ll

    Ki = cho_solve((L, True), np.eye(m))
    S = np.outer(alpha, alpha) - Ki
    grad = np.empty_like(params_log)
    d2 = _sq_dists_per_dim(U, U)
    for j in range(d):
        dK = s2 * C * d2[:, :, j] / theta[j] ** 2
        grad[j] = 0.5 * float((S * dK).sum())
    grad[d] = 0.5 * float((S * (s2 * C)).sum())
    dK_g = g / counts
    grad[d + 1] = (0.5 * float(np.diag(S) @ dK_g)
                   - 0.5 * (N - m) + 0.5 * W / g)
    return ll, grad


def _standardize_inputs(X: np.ndarray):
    lo = X.min(axis=0)
    hi = X.max(axis=0)
    width = hi - lo
    width[width == 0.0] = 1.0
    return lo, lo + width


def _build_model(X, y, theta, s2, g, start_logliks=()) -> GPModel:
    x_lo, x_hi = _standardize_inputs(X)
    Z = (X - x_lo) / (x_hi - x_lo)
    y_mean = float(np.mean(y))
    y_scale = float(np.std(y)) or 1.0
    ys = (y - y_mean) / y_scale
    U, ybar, counts, W = _pool_replicates(Z, ys)
    K = s2 * _corr(U, U, theta) + g * np.diag(1.0 / counts)
    L, jitter = _chol_with_ladder(K, s2)
    if L is None:
        raise GPFitError(
            f"covariance factorization failed even with jitter up to {_JITTER_LADDER[-1]:g} "
            f"(m={len(U)}, theta={np.round(theta, 4)}, g={g:g})")
    alpha = cho_solve((L, True), ybar)
    params = np.concatenate([theta, [s2, g]])
    ll = _pooled_loglik(
        np.log(np.maximum(params, 1e-300)), U, ybar, counts, W, len(y),
        want_grad=False)
    return GPModel(
        x_lo=x_lo, x_hi=x_hi, y_mean=y_mean, y_scale=y_scale,
        U=U, ybar=ybar, counts=counts,
        theta=theta, s2=s2, g=g,
        chol=L, alpha=alpha, loglik=float(ll),
        start_logliks=tuple(start_logliks), jitter=jitter,
        X_raw=np.array(X, dtype=float), y_raw=np.array(y, dtype=float),
    )


def gp_fit(X, y, config: GPConfig | None = None) -> GPModel:
    """Fit the surrogate by multi-start maximum marginal likelihood.

    Duplicate rows (replicates) are pooled exactly; the nugget is kept
    strictly positive (at least ``config.nugget_floor``).
    """
    config = config or GPConfig()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if len(X) != len(y):
        raise ValueError(f"X has {len(X)} rows but y has {len(y)}")
    n, d = X.shape

    x_lo, x_hi = _standardize_inputs(X)
    Z = (X - x_lo) / (x_hi - x_lo)
    y_mean = float(np.mean(y))
    y_scale = float(np.std(y)) or 1.0
    ys = (y - y_mean) / y_scale
    U, ybar, counts, W = _pool_replicates(Z, ys)

    lo_t, hi_t = config.theta_bounds
    lo_s, hi_s = config.s2_bounds
    lo_g, hi_g = config.nugget_floor, config.nugget_cap
    bounds = ([(math.log(lo_t), math.log(hi_t))] * d
              + [(math.log(lo_s), math.log(hi_s))]
              + [(math.log(lo_g), math.log(hi_g))])

    # heuristic start: per-dimension median separation, unit signal,
    # moderate noise (or the replicate-pooled variance when available)
    if len(U) > 1:
        med = np.median(np.abs(U[:, None, :] - U[None, :, :]), axis=(0, 1))
        theta0 = np.clip(med * 2.0, lo_t * 2, hi_t / 2)
    else:
        theta0 = np.full(d, 0.5)
    g0 = W / max(1.0, len(y) - len(U)) if len(y) > len(U) else 0.05
    g0 = float(np.clip(g0, max(lo_g, 1e-6), 1.0))
    starts = [np.log(np.concatenate([theta0, [1.0, g0]]))]
    # a floor-nugget start lets noise-free data reach the interpolation regime
    starts.append(np.log(np.concatenate([theta0, [1.0, lo_g * 1.5]])))

    rng = np.random.default_rng(config.seed)
    while len(starts) < config.n_starts:
        t = np.exp(rng.uniform(math.log(0.1), math.log(5.0), size=d))
        s = np.exp(rng.uniform(math.log(0.2), math.log(5.0)))
        gg = np.exp(rng.uniform(math.log(max(lo_g, 1e-7)), math.log(0.5)))
        starts.append(np.log(np.concatenate([t, [s, gg]])))

    def objective(p):
        ll, grad = _pooled_loglik(p, U, ybar, counts, W, n)
        return -ll, -grad

    best, best_ll = None, -np.inf
    start_lls = []
    for p0 in starts:
        p0 = np.clip(p0, [b[0] for b in bounds], [b[1] for b in bounds])
        start_lls.append(float(_pooled_loglik(p0, U, ybar, counts, W, n, want_grad=False)))
        res = minimize(objective, p0, jac=True, method="L-BFGS-B",
                       bounds=bounds, options={"maxiter": config.max_iter})
        ll = -float(res.fun)
        if ll > best_ll:
            best, best_ll = res.x, ll

    if best is None:
        raise GPFitError("all multi-start optimizations failed")
    theta = np.exp(best[:d])
    s2 = float(np.exp(best[d]))
    g = float(np.exp(best[d + 1]))
    return _build_model(X, y, theta, s2, g, start_logliks=start_lls)


def gp_condition(model: GPModel, X_new, y_new) -> GPModel:
    """New model conditioned on extra observations, hyperparameters held
    fixed (used for within-batch suggestion updates)."""
    X = np.vstack([model.X_raw, np.atleast_2d(np.asarray(X_new, dtype=float))])
    y = np.concatenate([model.y_raw, np.asarray(y_new, dtype=float).ravel()])
    return _build_model(X, y, model.theta, model.s2, model.g,
                        start_logliks=model.start_logliks)


def gp_predict(model: GPModel, X, include_noise: bool = False):
    """Functional alias for GPModel.predict."""
    return model.predict(X, include_noise=include_noise)


def expected_improvement(mu, sd, f_min):
    """Closed-form expected improvement below f_min (minimization form).

    EI = (f_min - mu) Phi(z) + sd phi(z), z = (f_min - mu)/sd; at sd = 0
    it degenerates to max(f_min - mu, 0).
    """
    mu_arr = np.asarray(mu, dtype=float)
    sd_arr = np.asarray(sd, dtype=float)
    scalar = mu_arr.ndim == 0 and sd_arr.ndim == 0
    mu_arr, sd_arr = np.atleast_1d(mu_arr), np.atleast_1d(sd_arr)
    mu_arr, sd_arr = np.broadcast_arrays(mu_arr, sd_arr)
    improve = f_min - mu_arr
    out = np.maximum(improve, 0.0)
    pos = sd_arr > 0
    if np.any(pos):
        z = improve[pos] / sd_arr[pos]
        out = out.astype(float)
        out[pos] = improve[pos] * ndtr(z) + sd_arr[pos] * _norm_pdf(z)
    out = np.clip(out, 0.0, None)
    return float(out[0]) if scalar else out


@dataclass
class Suggestion:
    """A proposed next run: where, why, and how many replicates."""

    point: np.ndarray
    value: float             # acquisition value (EI) or predicted mean (mean-opt)
    mode: str                # "ei" | "mean"
    f_min: float             # incumbent: minimum of the predictive mean surface
    fallback: bool = False   # EI degenerated (no predictive spread); used mean-opt
    recommended_reps: int = 1

    def to_dict(self) -> dict:
        return {
            "point": [float(v) for v in self.point],
            "value": float(self.value),
            "mode": self.mode,
            "f_min": float(self.f_min),
            "fallback": self.fallback,
            "recommended_reps": int(self.recommended_reps),
        }


def _recommend_reps(model: GPModel, spread: float) -> int:
    # more replicates when the noise floor is large relative to the
    # signal range the surrogate currently sees
    if spread <= 0:
        return 10
    ratio = math.sqrt(max(model.noise_variance, 0.0)) / spread
    return int(np.clip(round(1 + 14 * ratio), 1, 10))


def suggest_next(model: GPModel, bounds, mode: str = "ei",
                 rng: np.random.Generator | None = None,
                 n_candidates: int = 2000, n_restarts: int = 8) -> Suggestion:
    """Propose the next input by maximizing expected improvement (or by
    minimizing the predictive mean with ``mode="mean"``).

    The incumbent f_min is the minimum of the predictive mean over a
    dense candidate set (an LHS of ``n_candidates`` points plus the
    training inputs), treating it as a deterministic quantity. The
    acquisition is then polished by L-BFGS-B from the best candidates.
    A model with no predictive spread anywhere falls back from EI to
    mean optimization and flags it.
    """
    if mode not in ("ei", "mean"):
        raise ValueError(f"unknown mode {mode!r}")
    rng = rng or np.random.default_rng(0)
    lo, hi = bounds
    d = model.U.shape[1]
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (d,)).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (d,)).copy()

    cand = latin_hypercube(n_candidates, d, (lo, hi), rng)
    train = model.x_lo + model.U * (model.x_hi - model.x_lo)
    inside = np.all((train >= lo) & (train <= hi), axis=1)
    cand = np.vstack([cand, train[inside]])
    mu, sd = model.predict(cand)
    f_min = float(mu.min())
    spread = float(mu.max() - mu.min())
    reps = _recommend_reps(model, spread)

    requested = mode
    fallback = False
    if mode == "ei" and float(sd.max()) <= 1e-12 * max(model.y_scale, 1.0):
        mode, fallback = "mean", True

    box = list(zip(lo, hi))
    if mode == "ei":
        acq = expected_improvement(mu, sd, f_min)
        order = np.argsort(acq)[::-1][:n_restarts]

        def neg_ei_and_grad(x):
            m1, s1, dmu, dsd = model.predict_one_with_grads(x)
            ei = expected_improvement(m1, s1, f_min)
            if s1 > 0:
                z = (f_min - m1) / s1
                grad = ndtr(z) * dmu - _norm_pdf(z) * dsd
            else:
                grad = dmu if f_min > m1 else np.zeros_like(dmu)
            return -ei, grad

        best_x, best_v = cand[order[0]], float(acq[order[0]])
        for i in order:
            res = minimize(neg_ei_and_grad, cand[i], jac=True, method="L-BFGS-B",
                           bounds=box, options={"maxiter": 40})
            if -res.fun > best_v:
                best_x, best_v = res.x, -float(res.fun)
        return Suggestion(point=np.clip(best_x, lo, hi), value=best_v, mode="ei",
                          f_min=f_min, fallback=False, recommended_reps=reps)

    order = np.argsort(mu)[:n_restarts]

    def mean_and_grad(x):
        m1, _ = model.predict(x.reshape(1, -1))
        return float(m1[0]), model.predict_mean_grad(x)

    best_x, best_v = cand[order[0]], float(mu[order[0]])
    for i in order:
        res = minimize(mean_and_grad, cand[i], jac=True, method="L-BFGS-B", bounds=box)
        if res.fun < best_v:
            best_x, best_v = res.x, float(res.fun)
    return Suggestion(point=np.clip(best_x, lo, hi), value=best_v, mode="mean",
                      f_min=f_min, fallback=fallback and requested == "ei",
                      recommended_reps=reps)
