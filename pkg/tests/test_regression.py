import numpy as np
import pytest

from covscreen.regression import adaptive_lasso
from covscreen.regression import bic_score
from covscreen.regression import fit_on_grid
from covscreen.regression import initial_estimate
from covscreen.regression import kkt_residual
from covscreen.regression import lambda_grid
from covscreen.regression import lambda_max
from covscreen.regression import lasso_cd
from covscreen.regression import lasso_path
from covscreen.regression import lasso_path_cd
from covscreen.regression import lasso_select
from covscreen.regression import ols_fit

from conftest import orthogonal_design


def standardized_columns(rng, n, q):
    X = rng.standard_normal((n, q))
    X -= X.mean(axis=0)
    return X / np.sqrt((X ** 2).mean(axis=0))


class TestOls:

    def test_exact_fit(self, rng):
        X = standardized_columns(rng, 30, 1)
        coefficients, residuals = ols_fit(2.0 * X[:, 0], X)
        np.testing.assert_allclose(coefficients, [2.0])
        np.testing.assert_allclose(residuals, 0.0, atol=1e-12)

    def test_orthogonal_response(self, rng):
        Q = orthogonal_design(rng, 30, 3)
        coefficients, residuals = ols_fit(Q[:, 2], Q[:, :2])
        np.testing.assert_allclose(coefficients, 0.0, atol=1e-12)
        np.testing.assert_allclose(residuals, Q[:, 2], atol=1e-12)

    def test_normal_equations(self, rng):
        X = rng.standard_normal((30, 4))
        y = rng.standard_normal(30)
        coefficients, _ = ols_fit(y, X)
        np.testing.assert_allclose(coefficients, np.linalg.solve(X.T @ X, X.T @ y), rtol=1e-10)

    def test_empty_subset(self, rng):
        y = rng.standard_normal(10)
        coefficients, residuals = ols_fit(y, np.zeros((10, 0)))
        assert coefficients.size == 0
        np.testing.assert_array_equal(residuals, y)


class TestLassoCd:

    def test_zero_lambda_is_ols(self, rng):
        X = standardized_columns(rng, 50, 5)
        y = X @ [1.0, -0.5, 0.0, 2.0, 0.3] + rng.standard_normal(50)
        fit = lasso_cd(y, X, 0.0)
        np.testing.assert_allclose(fit.coefficients, ols_fit(y, X)[0], atol=1e-6)
        assert fit.converged

    def test_full_shrinkage(self, rng):
        X = standardized_columns(rng, 40, 6)
        y = rng.standard_normal(40)
        weights = rng.uniform(0.5, 2.0, 6)
        lam = lambda_max(y, X, weights)
        np.testing.assert_allclose(lam, np.max(np.abs(X.T @ y) / (40 * weights)))
        fit = lasso_cd(y, X, lam * (1 + 1e-12), weights)
        assert fit.df == 0

    def test_kkt_conditions(self, rng):
        X = standardized_columns(rng, 40, 6)
        y = X @ [1.0, 0.0, -1.0, 0.0, 0.0, 0.5] + rng.standard_normal(40)
        fit = lasso_cd(y, X, 0.1)
        gradient = X.T @ (y - X @ fit.coefficients) / 40
        active = fit.coefficients != 0
        np.testing.assert_allclose(gradient[active], 0.1 * np.sign(fit.coefficients[active]), atol=1e-6)
        assert np.all(np.abs(gradient[~active]) <= 0.1 + 1e-6)
        assert kkt_residual(fit, y, X) <= 1e-6

    def test_kkt_on_random_problems(self, rng):
        for _ in range(500):
            n = int(rng.integers(10, 60))
            q = int(rng.integers(1, 30))
            X = standardized_columns(rng, n, q)
            y = X[:, :min(q, 3)] @ rng.standard_normal(min(q, 3)) + rng.standard_normal(n)
            weights = rng.uniform(0.2, 3.0, q)
            lam = lambda_max(y, X, weights) * rng.uniform(0.01, 1.0)
            fit = lasso_cd(y, X, lam, weights)
            if fit.converged:
                assert kkt_residual(fit, y, X) <= 1e-6

    def test_objective_never_increases(self, rng):
        X = standardized_columns(rng, 50, 20)
        y = X[:, :3] @ [2.0, -1.0, 1.0] + rng.standard_normal(50)
        history = np.asarray(lasso_cd(y, X, 0.05).history)
        assert np.all(np.diff(history) <= 1e-12 * np.abs(history[:-1]).max())

    def test_zero_weight_is_unpenalized(self, rng):
        X = standardized_columns(rng, 40, 3)
        y = 0.01 * X[:, 0] + rng.standard_normal(40)
        fit = lasso_cd(y, X, 10.0, weights=[0.0, 1.0, 1.0])
        assert fit.coefficients[0] != 0.0
        np.testing.assert_array_equal(fit.coefficients[1:], 0.0)

    def test_intercept(self, rng):
        X = rng.standard_normal((60, 2)) + 3.0
        y = 5.0 + X @ [1.0, -1.0] + 0.1 * rng.standard_normal(60)
        fit = lasso_cd(y, X, 0.0, fit_intercept=True)
        np.testing.assert_allclose(fit.coefficients, [1.0, -1.0], atol=0.1)
        np.testing.assert_allclose(fit.predict(X).mean(), y.mean())

    def test_rejects_negative_penalties(self, rng):
        X = standardized_columns(rng, 10, 2)
        with pytest.raises(ValueError):
            lasso_cd(np.zeros(10), X, -1.0)
        with pytest.raises(ValueError):
            lasso_cd(np.zeros(10), X, 1.0, weights=[1.0, -1.0])


class TestPath:

    def test_grid(self):
        grid = lambda_grid(1.0, 5, 1e-4)
        np.testing.assert_allclose(grid, [1.0, 1e-1, 1e-2, 1e-3, 1e-4])
        np.testing.assert_array_equal(lambda_grid(0.0), [0.0])

    def test_path_stops_at_max_df(self, rng):
        X = standardized_columns(rng, 20, 40)
        y = rng.standard_normal(20)
        lambdas = lambda_grid(lambda_max(y, X), 50, 1e-3)
        fits = lasso_path(y, X, lambdas, max_df=5)
        assert fits[-1].df >= 5
        assert all(fit.df < 5 for fit in fits[:-1])

    def test_bic_score(self):
        assert bic_score(100, 50.0, 3) == pytest.approx(100 * np.log(0.5) + 3 * np.log(100))
        assert np.isfinite(bic_score(100, 0.0, 3))

    def test_extended_bic_adds_candidate_term(self):
        plain = bic_score(100, 50.0, 3)
        assert bic_score(100, 50.0, 3, q=22, ebic_gamma=1.0) == pytest.approx(plain + 6 * np.log(22))
        assert bic_score(100, 50.0, 3, q=22, ebic_gamma=0.5) == pytest.approx(plain + 3 * np.log(22))
        assert bic_score(100, 50.0, 3, q=1, ebic_gamma=1.0) == pytest.approx(plain)
        assert bic_score(100, 50.0, 0, q=22, ebic_gamma=1.0) == pytest.approx(100 * np.log(0.5))

    @pytest.mark.parametrize("fit_intercept", [False, True])
    def test_compiled_path_matches_coordinate_descent(self, rng, fit_intercept):
        for _ in range(5):
            X = standardized_columns(rng, 60, 10) + (1.5 if fit_intercept else 0.0)
            y = X[:, :3] @ [1.0, -0.5, 0.25] + rng.standard_normal(60) + (2.0 if fit_intercept else 0.0)
            weights = rng.uniform(0.2, 3.0, 10)
            lambdas = lambda_grid(lambda_max(y, X, weights, fit_intercept), 20, 1e-3)
            fast = lasso_path(y, X, lambdas, weights, fit_intercept=fit_intercept)
            slow = lasso_path_cd(y, X, lambdas, weights, fit_intercept=fit_intercept)
            assert len(fast) == len(slow) == 20
            for a, b in zip(fast, slow):
                assert a.converged
                np.testing.assert_allclose(a.coefficients, b.coefficients, atol=1e-4)
                assert a.intercept == pytest.approx(b.intercept, abs=1e-4)
                assert a.objective == pytest.approx(b.objective, rel=1e-6, abs=1e-10)
                assert kkt_residual(a, y, X) <= 1e-5

    def test_zero_weight_uses_coordinate_descent(self, rng):
        X = standardized_columns(rng, 40, 4)
        y = X[:, 0] + rng.standard_normal(40)
        weights = np.array([0.0, 1.0, 1.0, 1.0])
        lambdas = lambda_grid(lambda_max(y, X, weights), 5, 1e-2)
        fast = lasso_path(y, X, lambdas, weights)
        slow = lasso_path_cd(y, X, lambdas, weights)
        for a, b in zip(fast, slow):
            np.testing.assert_array_equal(a.coefficients, b.coefficients)

    def test_extended_bic_never_selects_more(self, rng):
        for _ in range(5):
            X = standardized_columns(rng, 60, 20)
            y = X[:, 0] + 2.0 * rng.standard_normal(60)
            y -= y.mean()
            weights = np.ones(20)
            plain = fit_on_grid(y, X, weights)
            extended = fit_on_grid(y, X, weights, ebic_gamma=1.0)
            assert extended.df <= plain.df

    def test_criteria(self, rng):
        X = standardized_columns(rng, 80, 10)
        y = X[:, :2] @ [2.0, -2.0] + rng.standard_normal(80)
        for criterion in ('bic', 'cv'):
            fit = fit_on_grid(y, X, np.ones(10), criterion=criterion, seed=3)
            assert {0, 1} <= set(fit.support.tolist())
        with pytest.raises(ValueError):
            fit_on_grid(y, X, np.ones(10), criterion='aic')

    def test_cv_is_seeded(self, rng):
        X = standardized_columns(rng, 60, 15)
        y = X[:, :2] @ [1.0, 1.0] + rng.standard_normal(60)
        first = lasso_select(y, X, seed=11)[1]
        second = lasso_select(y, X, seed=11)[1]
        np.testing.assert_array_equal(first.coefficients, second.coefficients)


class TestAdaptiveLasso:

    def test_orthogonal_recovery(self, rng):
        n = 200
        X = orthogonal_design(rng, n, 4)
        y = X @ [1.0, -1.0, 0.0, 0.0] + 0.1 * rng.standard_normal(n)
        selected, fit, residuals = adaptive_lasso(y, X)
        assert selected == [0, 1]
        np.testing.assert_allclose(residuals, y - X @ fit.coefficients)

    def test_single_predictor(self, rng):
        X = standardized_columns(rng, 400, 1)
        y = 3.0 * X[:, 0] + rng.standard_normal(400)
        selected, fit, _ = adaptive_lasso(y, X)
        assert selected == [0]
        assert fit.coefficients[0] == pytest.approx(3.0, abs=0.25)

    def test_empty_subset(self, rng):
        y = rng.standard_normal(10)
        selected, fit, residuals = adaptive_lasso(y, np.zeros((10, 0)))
        assert len(selected) == 0
        np.testing.assert_array_equal(residuals, y)

    def test_initial_estimate_regimes(self, rng):
        y = rng.standard_normal(20)
        narrow = standardized_columns(rng, 20, 5)
        np.testing.assert_allclose(initial_estimate(y, narrow), ols_fit(y, narrow)[0])
        wide = standardized_columns(rng, 20, 50)
        alpha = 1e-3 * 20
        expected = np.linalg.solve(wide.T @ wide + alpha * np.eye(50), wide.T @ y)
        np.testing.assert_allclose(initial_estimate(y, wide), expected, rtol=1e-6, atol=1e-8)

    def test_column_order_does_not_change_selection(self, rng):
        for _ in range(5):
            X = standardized_columns(rng, 150, 8)
            y = X[:, [1, 4, 6]] @ [1.5, -1.0, 0.75] + rng.standard_normal(150)
            y -= y.mean()
            perm = rng.permutation(8)
            selected, fit, _ = adaptive_lasso(y, X)
            selected_p, fit_p, _ = adaptive_lasso(y, X[:, perm])
            assert sorted(perm[selected_p.indices].tolist()) == selected.to_list()
            np.testing.assert_allclose(fit_p.coefficients, fit.coefficients[perm], atol=1e-4)

    @pytest.mark.slow
    def test_pure_noise_rarely_selects(self):
        counts = np.zeros(5)
        for seed in range(100):
            rng = np.random.default_rng(seed)
            X = standardized_columns(rng, 100, 5)
            y = rng.standard_normal(100)
            selected, _, _ = adaptive_lasso(y - y.mean(), X)
            counts[selected.indices] += 1
        assert np.all(counts / 100 <= 0.1)
