"""GP surrogate: likelihood identities, predictions, EI, suggestions."""

import math

import numpy as np
import pytest
from scipy import stats

from yieldlab.gp import (
    GPConfig,
    GPModel,
    _corr,
    _pooled_loglik,
    expected_improvement,
    gp_condition,
    gp_fit,
    gp_predict,
    suggest_next,
)
from yieldlab.rsm import latin_hypercube


def smooth_2d(X):
    return np.sin(3.0 * X[:, 0]) * (1.0 - X[:, 1]) + X[:, 1] ** 2


def rng_of(seed):
    return np.random.default_rng(seed)


class TestPooledLikelihood:
    def test_matches_dense_construction(self):
        # dual route: pooled decomposition vs the raw N x N Gaussian density
        rng = rng_of(0)
        pts = rng.uniform(0, 1, size=(6, 2))
        reps = np.array([1, 3, 2, 5, 1, 4])
        X = np.repeat(pts, reps, axis=0)
        y = rng.normal(size=len(X))
        theta = np.array([0.4, 0.7])
        s2, g = 1.3, 0.2

        U, inverse = np.unique(X, axis=0, return_inverse=True)
        counts = np.bincount(inverse).astype(float)
        ybar = np.bincount(inverse, weights=y) / counts
        W = float(((y - ybar[inverse]) ** 2).sum())
        ll_pooled = _pooled_loglik(
            np.log(np.concatenate([theta, [s2, g]])),
            U, ybar, counts, W, len(y), want_grad=False)

        K_full = s2 * _corr(X, X, theta) + g * np.eye(len(X))
        ll_dense = stats.multivariate_normal(mean=np.zeros(len(X)), cov=K_full).logpdf(y)
        assert ll_pooled == pytest.approx(ll_dense, rel=1e-10)

    def test_gradient_matches_finite_differences(self):
        rng = rng_of(1)
        pts = rng.uniform(0, 1, size=(8, 3))
        X = np.repeat(pts, 2, axis=0)
        y = rng.normal(size=len(X))
        U, inverse = np.unique(X, axis=0, return_inverse=True)
        counts = np.bincount(inverse).astype(float)
        ybar = np.bincount(inverse, weights=y) / counts
        W = float(((y - ybar[inverse]) ** 2).sum())
        p = np.log(np.array([0.5, 0.8, 0.3, 1.1, 0.15]))
        _, grad = _pooled_loglik(p, U, ybar, counts, W, len(y))
        eps = 1e-6
        for j in range(len(p)):
            pp = p.copy(); pp[j] += eps
            pm = p.copy(); pm[j] -= eps
            fd = (_pooled_loglik(pp, U, ybar, counts, W, len(y), want_grad=False)
                  - _pooled_loglik(pm, U, ybar, counts, W, len(y), want_grad=False)) / (2 * eps)
            assert grad[j] == pytest.approx(fd, rel=1e-5, abs=1e-7)


class TestFitAndPredict:
    def test_interpolates_noise_free_training_data(self):
        rng = rng_of(2)
        X = latin_hypercube(25, 2, (0.0, 1.0), rng)
        y = smooth_2d(X)
        model = gp_fit(X, y, GPConfig(seed=1))
        mu, sd = model.predict(X)
        assert np.max(np.abs(mu - y)) < 1e-5
        assert np.all(sd < 1e-3)

    def test_reverts_to_prior_far_from_data(self):
        rng = rng_of(3)
        X = rng.uniform(0, 1, size=(20, 2))
        y = smooth_2d(X)
        model = gp_fit(X, y, GPConfig(seed=2))
        far = np.array([[60.0, -55.0]])
        mu, sd = model.predict(far)
        assert mu[0] == pytest.approx(model.y_mean, rel=1e-6, abs=1e-8)
        assert sd[0] == pytest.approx(model.prior_sd, rel=1e-6)

    def test_latent_sd_no_larger_than_prior_sd(self):
        rng = rng_of(4)
        X = rng.uniform(0, 1, size=(15, 2))
        y = smooth_2d(X) + rng.normal(0, 0.05, 15)
        model = gp_fit(X, y, GPConfig(seed=3))
        probe = rng.uniform(-0.2, 1.2, size=(50, 2))
        _, sd = model.predict(probe)
        assert np.all(sd <= model.prior_sd * (1 + 1e-9))

    def test_matches_dense_conditional_oracle(self):
        # brute-force conditional-Gaussian formulas coded independently
        rng = rng_of(5)
        X = rng.uniform(0, 1, size=(20, 2))
        y = smooth_2d(X) + rng.normal(0, 0.1, 20)
        model = gp_fit(X, y, GPConfig(seed=4))
        Xs = rng.uniform(0, 1, size=(7, 2))
        mu, sd = model.predict(Xs)

        Z = model.standardize(X)
        Zs = model.standardize(Xs)
        ys = (y - model.y_mean) / model.y_scale
        K = model.s2 * _corr(Z, Z, model.theta) + model.g * np.eye(len(X))
        ks = model.s2 * _corr(Zs, Z, model.theta)
        Kinv = np.linalg.inv(K)
        mu_o = model.y_mean + model.y_scale * (ks @ Kinv @ ys)
        var_o = model.s2 - np.einsum("ij,jk,ik->i", ks, Kinv, ks)
        sd_o = model.y_scale * np.sqrt(np.clip(var_o, 0, None))
        assert np.allclose(mu, mu_o, rtol=1e-8, atol=1e-10)
        assert np.allclose(sd, sd_o, rtol=1e-8, atol=1e-10)

    def test_nugget_recovers_known_noise_variance(self):
        rng = rng_of(6)
        pts = latin_hypercube(200, 2, (0.0, 1.0), rng)
        v = 0.25
        X = np.repeat(pts, 5, axis=0)
        f = 3.0 * smooth_2d(X)
        y = f + rng.normal(0, math.sqrt(v), len(X))
        model = gp_fit(X, y, GPConfig(seed=5, n_starts=4))
        assert v / 2 <= model.noise_variance <= v * 2

    def test_loglik_at_fit_beats_every_start(self):
        rng = rng_of(7)
        X = rng.uniform(0, 1, size=(30, 3))
        y = X[:, 0] + np.sin(4 * X[:, 1]) + rng.normal(0, 0.05, 30)
        model = gp_fit(X, y, GPConfig(seed=6))
        assert model.start_logliks
        assert model.loglik >= max(model.start_logliks) - 1e-6

    def test_mean_gradient_matches_finite_differences(self):
        rng = rng_of(8)
        X = rng.uniform(0, 2, size=(25, 3))
        y = X[:, 0] ** 2 - X[:, 1] + 0.5 * np.sin(3 * X[:, 2]) + rng.normal(0, 0.01, 25)
        model = gp_fit(X, y, GPConfig(seed=7))
        for _ in range(5):
            x = rng.uniform(0.2, 1.8, size=3)
            grad = model.predict_mean_grad(x)
            eps = 1e-5
            for j in range(3):
                xp = x.copy(); xp[j] += eps
                xm = x.copy(); xm[j] -= eps
                fd = (model.predict(xp.reshape(1, -1))[0][0]
                      - model.predict(xm.reshape(1, -1))[0][0]) / (2 * eps)
                assert grad[j] == pytest.approx(fd, rel=1e-5, abs=1e-7)

    def test_loo_matches_brute_force_refits(self):
        # dual route for the closed-form shortcut: drop each unique point
        # and predict it back at fixed hyperparameters
        rng = rng_of(9)
        X = rng.uniform(0, 1, size=(12, 2))
        y = smooth_2d(X) + rng.normal(0, 0.1, 12)
        model = gp_fit(X, y, GPConfig(seed=8))
        loo = model.loo_means()

        U = model.U
        yb = model.ybar
        m = len(U)
        for j in range(m):
            keep = np.arange(m) != j
            K = (model.s2 * _corr(U[keep], U[keep], model.theta)
                 + model.g * np.eye(m - 1))
            k = model.s2 * _corr(U[j:j + 1], U[keep], model.theta)
            mu_j = model.y_mean + model.y_scale * float((k @ np.linalg.solve(K, yb[keep]))[0])
            assert loo[j] == pytest.approx(mu_j, rel=1e-8, abs=1e-9)

    def test_loo_beats_constant_predictor_on_smooth_data(self):
        rng = rng_of(10)
        X = latin_hypercube(30, 2, (0.0, 1.0), rng)
        y = smooth_2d(X)
        model = gp_fit(X, y, GPConfig(seed=9))
        targets = model.training_means()  # aligned with loo_means
        rmse_loo = float(np.sqrt(np.mean((model.loo_means() - targets) ** 2)))
        rmse_const = float(np.sqrt(np.mean((np.mean(y) - y) ** 2)))
        assert rmse_loo < rmse_const

    def test_conditioning_adds_data_without_refit(self):
        rng = rng_of(11)
        X = rng.uniform(0, 1, size=(15, 2))
        y = smooth_2d(X) + rng.normal(0, 0.05, 15)
        model = gp_fit(X, y, GPConfig(seed=10))
        X2 = rng.uniform(0, 1, size=(4, 2))
        y2 = smooth_2d(X2)
        cond = gp_condition(model, X2, y2)
        assert np.array_equal(cond.theta, model.theta)
        assert cond.s2 == model.s2 and cond.g == model.g
        assert len(cond.y_raw) == 19
        # new data pulls the predictive mean toward the new values
        mu_before, _ = model.predict(X2)
        mu_after, _ = cond.predict(X2)
        assert np.mean(np.abs(mu_after - y2)) <= np.mean(np.abs(mu_before - y2)) + 1e-12


class TestExpectedImprovement:
    def test_degenerate_sd_zero(self):
        assert expected_improvement(1.0, 0.0, 1.0) == 0.0
        assert expected_improvement(2.0, 0.0, 1.0) == 0.0
        assert expected_improvement(0.25, 0.0, 1.0) == pytest.approx(0.75)

    def test_analytic_point_at_incumbent(self):
        assert expected_improvement(0.0, 1.0, 0.0) == pytest.approx(
            1.0 / math.sqrt(2 * math.pi), abs=1e-12)

    def test_known_value_one_sd_below(self):
        # frozen: Phi(1) + phi(1) for f_min=0, mu=-1, sd=1
        want = stats.norm.cdf(1.0) + stats.norm.pdf(1.0)
        assert expected_improvement(-1.0, 1.0, 0.0) == pytest.approx(want, rel=1e-12)
        assert want == pytest.approx(1.0833, abs=5e-5)

    def test_monte_carlo_oracle(self):
        rng = rng_of(12)
        z = rng.standard_normal(10**6)
        for _ in range(10):
            mu = rng.uniform(-2, 2)
            sd = rng.uniform(0.05, 2.0)
            f_min = rng.uniform(-2, 2)
            draws = np.maximum(f_min - (mu + sd * z), 0.0)
            mc = float(draws.mean())
            se = float(draws.std(ddof=1) / math.sqrt(len(z)))
            assert abs(expected_improvement(mu, sd, f_min) - mc) <= 3 * se + 1e-12

    def test_linear_in_sd_at_fixed_z(self):
        f_min = 0.7
        for z in (-1.0, 0.0, 1.5):
            base = None
            for sd in (0.5, 1.0, 2.0, 4.0):
                mu = f_min - z * sd
                val = expected_improvement(mu, sd, f_min) / sd
                if base is None:
                    base = val
                assert val == pytest.approx(base, rel=1e-10)

    def test_increasing_in_sd_at_incumbent_mean(self):
        vals = [expected_improvement(0.0, s, 0.0) for s in np.linspace(0.1, 3, 15)]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_jensen_lower_bound_on_grid(self):
        for mu in np.linspace(-2, 2, 9):
            for sd in np.linspace(0.0, 2, 9):
                ei = expected_improvement(mu, sd, 0.5)
                assert ei >= max(0.5 - mu, 0.0) - 1e-12

    def test_vectorized(self):
        mu = np.array([0.0, 1.0, -1.0])
        sd = np.array([1.0, 0.0, 0.5])
        out = expected_improvement(mu, sd, 0.0)
        assert out.shape == (3,)
        assert out[1] == 0.0


class TestSuggestNext:
    def _toy_model(self, seed=13):
        rng = rng_of(seed)
        X = np.linspace(0, 1, 8).reshape(-1, 1)
        y = (X[:, 0] - 0.3) ** 2
        return gp_fit(X, y, GPConfig(seed=seed)), X, y

    def test_ei_explores_away_from_noise_free_training_minimum(self):
        model, X, y = self._toy_model()
        s = suggest_next(model, (0.0, 1.0), mode="ei", rng=rng_of(1))
        d_train = np.min(np.abs(s.point[0] - X[:, 0]))
        assert s.value > 0
        assert d_train > 1e-3  # EI vanishes exactly at interpolated points

    def test_ei_surface_nonnegative_and_zero_at_bad_training_points(self):
        model, X, y = self._toy_model()
        mu, sd = model.predict(X)
        f_min = float(mu.min())
        ei = expected_improvement(mu, sd, f_min)
        assert np.all(ei >= 0)
        worst = np.argmax(mu)
        assert ei[worst] == pytest.approx(0.0, abs=1e-9)

    def test_mean_opt_finds_quadratic_minimizer(self):
        rng = rng_of(14)
        X = latin_hypercube(40, 2, (0.0, 1.0), rng)
        y = (X[:, 0] - 0.62) ** 2 + (X[:, 1] - 0.37) ** 2
        model = gp_fit(X, y, GPConfig(seed=11))
        s = suggest_next(model, (0.0, 1.0), mode="mean", rng=rng_of(2))
        assert s.mode == "mean"
        assert s.point[0] == pytest.approx(0.62, abs=1e-3)
        assert s.point[1] == pytest.approx(0.37, abs=1e-3)

    def test_degenerate_model_falls_back_to_mean(self):
        from yieldlab.gp import _build_model

        model, X, y = self._toy_model()
        # zero signal variance: predictive sd is identically zero
        degen = _build_model(model.X_raw, model.y_raw, model.theta, 0.0, model.g)
        _, sd = degen.predict(X)
        assert np.all(sd == 0.0)
        s = suggest_next(degen, (0.0, 1.0), mode="ei", rng=rng_of(3))
        assert s.fallback
        assert s.mode == "mean"

    def test_suggestion_respects_bounds_and_serializes(self):
        model, _, _ = self._toy_model()
        s = suggest_next(model, (0.1, 0.9), mode="ei", rng=rng_of(4))
        assert 0.1 <= s.point[0] <= 0.9
        d = s.to_dict()
        assert set(d) == {"point", "value", "mode", "f_min", "fallback", "recommended_reps"}
        assert 1 <= d["recommended_reps"] <= 10
