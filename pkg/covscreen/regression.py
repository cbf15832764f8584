# -*- coding:utf-8 -*-

"""
Least squares, weighted Lasso by cyclic coordinate descent (the reference
solver) and along a lambda path by scikit-learn, and the adaptive Lasso
selector used inside the iterative screening loop.
"""

import math

import numpy as np
import scipy.linalg
from sklearn.linear_model import lasso_path as sklearn_lasso_path
from sklearn.model_selection import KFold

from .data_model import ActiveSet
from .errors import DataError
from .log import setup_default_logger

CRITERION_BIC = 'bic'
CRITERION_CV = 'cv'
CRITERIA = (CRITERION_BIC, CRITERION_CV)

WEIGHT_STABILIZER = 1e-6
RIDGE_PENALTY = 1e-3
CD_TOLERANCE = 1e-8
CD_MAX_SWEEPS = 100000
# dual-gap tolerance for the compiled path solver, relative to ||y||^2 / n
PATH_TOLERANCE = 1e-12
CV_FOLDS = 5

logger = setup_default_logger('covscreen.regression')


class LassoFit(object):
    """
    minimizer of (1/2n) ||y - X beta||^2 + lambda * sum_j w_j |beta_j|
    """

    def __init__(self, coefficients, intercept: float, lam: float, weights, iterations: int, converged: bool,
                 objective: float, history=None):
        self.coefficients = np.asarray(coefficients, dtype=float)
        self.intercept = float(intercept)
        self.lam = float(lam)
        self.weights = np.asarray(weights, dtype=float)
        self.iterations = int(iterations)
        self.converged = bool(converged)
        self.objective = float(objective)
        self.history = list(history or [])

    @property
    def support(self):
        return np.flatnonzero(self.coefficients)

    @property
    def df(self) -> int:
        return int(np.count_nonzero(self.coefficients))

    def predict(self, Xs):
        return Xs @ self.coefficients + self.intercept

    def to_dict(self):
        return {
            'coefficients': self.coefficients.tolist(),
            'intercept': self.intercept,
            'lambda': self.lam,
            'weights': self.weights.tolist(),
            'iterations': self.iterations,
            'converged': self.converged,
            'objective': self.objective,
        }

    def __str__(self):
        return 'LassoFit(lambda=%.4g, df=%d, iterations=%d, converged=%s)' % (
            self.lam, self.df, self.iterations, self.converged)


def _check_inputs(y, Xs):
    y = np.asarray(y, dtype=float)
    Xs = np.asarray(Xs, dtype=float)
    if Xs.ndim == 1:
        Xs = Xs[:, None]
    if Xs.shape[0] != y.shape[0]:
        raise DataError('response has %d rows but design has %d' % (y.shape[0], Xs.shape[0]))
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(Xs))):
        raise DataError('regression inputs contain non-finite values')
    return y, Xs


def ols_fit(y, Xs):
    """ least-squares coefficients and residuals; minimum-norm solution when rank deficient """
    y, Xs = _check_inputs(y, Xs)
    if Xs.shape[1] == 0:
        return np.zeros(0), y.copy()
    coefficients, _, rank, _ = scipy.linalg.lstsq(Xs, y)
    if rank < Xs.shape[1]:
        logger.warning('rank-deficient least squares, rank=%d, columns=%d, using minimum-norm solution',
                       rank, Xs.shape[1])
    return coefficients, y - Xs @ coefficients


def _soft_threshold(z, threshold):
    if z > threshold:
        return z - threshold
    if z < -threshold:
        return z + threshold
    return 0.0


def _objective(yy, c, gram, beta, penalty):
    # (1/2n)||y - X beta||^2 written with G = X^T X / n and c = X^T y / n
    return 0.5 * yy - c @ beta + 0.5 * beta @ (gram @ beta) + penalty @ np.abs(beta)


def lasso_cd(y, Xs, lam: float, weights=None, beta0=None, tol: float = CD_TOLERANCE,
             max_sweeps: int = CD_MAX_SWEEPS, fit_intercept: bool = False, gram=None, xty=None) -> LassoFit:
    """
    cyclic coordinate descent with per-coordinate soft thresholding.

    Sweeps alternate between the full coordinate set and the current nonzero
    set; the fit has converged once a full sweep moves no coefficient by more
    than tol. gram and xty (X^T X / n and X^T y / n of the centered data) may be
    passed in to share them along a path.
    """
    y, Xs = _check_inputs(y, Xs)
    n, q = Xs.shape
    if lam < 0 or not math.isfinite(lam):
        raise ValueError('lambda must be finite and non-negative, got %s' % lam)
    weights = np.ones(q) if weights is None else np.asarray(weights, dtype=float)
    if weights.shape != (q,) or np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise ValueError('weights must be %d finite non-negative values' % q)

    y_mean = y.mean() if fit_intercept else 0.0
    x_mean = Xs.mean(axis=0) if fit_intercept else np.zeros(q)
    if gram is None or xty is None:
        centered = Xs - x_mean
        gram = centered.T @ centered / n
        xty = centered.T @ (y - y_mean) / n
    yy = float((y - y_mean) @ (y - y_mean)) / n

    beta = np.zeros(q) if beta0 is None else np.array(beta0, dtype=float)
    penalty = lam * weights
    diagonal = np.diag(gram).copy()
    gradient = xty - gram @ beta
    history = [_objective(yy, xty, gram, beta, penalty)]

    sweeps = 0
    converged = False
    active_only = False
    while sweeps < max_sweeps:
        coordinates = np.flatnonzero(beta) if active_only else range(q)
        max_change = 0.0
        for j in coordinates:
            if diagonal[j] <= 0.0:
                continue
            old = beta[j]
            new = _soft_threshold(gradient[j] + diagonal[j] * old, penalty[j]) / diagonal[j]
            if new != old:
                change = new - old
                gradient -= gram[j] * change
                beta[j] = new
                if abs(change) > max_change:
                    max_change = abs(change)
        sweeps += 1
        history.append(_objective(yy, xty, gram, beta, penalty))
        if max_change <= tol:
            if not active_only:
                converged = True
                break
            active_only = False
        else:
            active_only = True
    if not converged:
        logger.warning('coordinate descent did not converge, lambda=%.4g, sweeps=%d', lam, sweeps)
    intercept = y_mean - x_mean @ beta if fit_intercept else 0.0
    return LassoFit(beta, intercept, lam, weights, sweeps, converged, history[-1], history)


def kkt_residual(fit: LassoFit, y, Xs) -> float:
    """ largest violation of the Lasso optimality conditions """
    y, Xs = _check_inputs(y, Xs)
    n = Xs.shape[0]
    residual = y - fit.predict(Xs)
    if fit.intercept != 0.0:
        Xs = Xs - Xs.mean(axis=0)
    gradient = Xs.T @ residual / n
    penalty = fit.lam * fit.weights
    beta = fit.coefficients
    active = beta != 0
    violation = np.where(active,
                         np.abs(gradient - penalty * np.sign(beta)),
                         np.maximum(0.0, np.abs(gradient) - penalty))
    return float(violation.max()) if violation.size else 0.0


def lambda_max(y, Xs, weights=None, fit_intercept: bool = False) -> float:
    """ smallest lambda at which every penalized coefficient is zero """
    y, Xs = _check_inputs(y, Xs)
    n, q = Xs.shape
    weights = np.ones(q) if weights is None else np.asarray(weights, dtype=float)
    if fit_intercept:
        y = y - y.mean()
        Xs = Xs - Xs.mean(axis=0)
    penalized = weights > 0
    if not penalized.any():
        return 0.0
    return float(np.max(np.abs(Xs[:, penalized].T @ y) / (n * weights[penalized])))


def lambda_grid(lam_max: float, n_lambda: int = 50, ratio: float = 1e-4):
    if lam_max <= 0:
        return np.array([0.0])
    return np.geomspace(lam_max, lam_max * ratio, n_lambda)


def lasso_path_cd(y, Xs, lambdas, weights=None, fit_intercept: bool = False, max_df: int = None):
    """
    warm-started lasso_cd fits along a decreasing lambda grid; the path stops
    early once the active set reaches max_df
    """
    y, Xs = _check_inputs(y, Xs)
    n, q = Xs.shape
    y_mean = y.mean() if fit_intercept else 0.0
    centered = Xs - Xs.mean(axis=0) if fit_intercept else Xs
    gram = centered.T @ centered / n
    xty = centered.T @ (y - y_mean) / n
    fits = []
    beta = None
    for lam in lambdas:
        fit = lasso_cd(y, Xs, lam, weights, beta0=beta, fit_intercept=fit_intercept, gram=gram, xty=xty)
        fits.append(fit)
        beta = fit.coefficients
        if max_df is not None and fit.df >= max_df:
            break
    return fits


def lasso_path(y, Xs, lambdas, weights=None, fit_intercept: bool = False, max_df: int = None,
               tol: float = PATH_TOLERANCE, max_sweeps: int = CD_MAX_SWEEPS):
    """
    same fits as lasso_path_cd, computed by scikit-learn's compiled path solver.

    Positive weights are absorbed into the design: column j is divided by w_j,
    the unit-weight problem is solved, and coefficient j is divided by w_j.
    Zero weights or a zero lambda go to lasso_path_cd.
    """
    y, Xs = _check_inputs(y, Xs)
    n, q = Xs.shape
    lambdas = np.atleast_1d(np.asarray(lambdas, dtype=float))
    weights = np.ones(q) if weights is None else np.asarray(weights, dtype=float)
    if weights.shape != (q,) or np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise ValueError('weights must be %d finite non-negative values' % q)
    if q == 0 or np.any(weights == 0) or np.any(lambdas <= 0):
        return lasso_path_cd(y, Xs, lambdas, weights, fit_intercept, max_df)

    y_mean = y.mean() if fit_intercept else 0.0
    x_mean = Xs.mean(axis=0) if fit_intercept else np.zeros(q)
    yc = y - y_mean
    centered = Xs - x_mean
    _, coefs, _, n_iters = sklearn_lasso_path(centered / weights, yc, alphas=lambdas, tol=tol, max_iter=max_sweeps,
                                              return_n_iter=True)
    fits = []
    for i, lam in enumerate(lambdas):
        beta = coefs[:, i] / weights
        residual = yc - centered @ beta
        objective = 0.5 * float(residual @ residual) / n + lam * float(weights @ np.abs(beta))
        converged = int(n_iters[i]) < max_sweeps
        if not converged:
            logger.warning('path solver did not converge, lambda=%.4g, iterations=%d', lam, n_iters[i])
        fit = LassoFit(beta, y_mean - x_mean @ beta, lam, weights, n_iters[i], converged, objective, [objective])
        fits.append(fit)
        if max_df is not None and fit.df >= max_df:
            break
    return fits


def bic_score(n: int, rss: float, df: int, q: int = None, ebic_gamma: float = 0.0) -> float:
    """
    n log(rss / n) + df log n, plus 2 * ebic_gamma * df * log q when the fit
    chose among q candidate columns (the extended BIC)
    """
    score = n * math.log(max(rss / n, np.finfo(float).tiny)) + df * math.log(n)
    if ebic_gamma > 0 and q is not None and q > 1:
        score += 2.0 * ebic_gamma * df * math.log(q)
    return score


def _choose_by_bic(y, Xs, fits, ebic_gamma=0.0):
    n, q = Xs.shape
    scores = [bic_score(n, float(np.sum((y - fit.predict(Xs)) ** 2)), fit.df, q, ebic_gamma) for fit in fits]
    return int(np.argmin(scores))


def _choose_by_cv(y, Xs, lambdas, weights, fit_intercept, max_df, seed):
    n = y.shape[0]
    errors = np.zeros(len(lambdas))
    folds = KFold(n_splits=min(CV_FOLDS, n), shuffle=True, random_state=seed)
    for train, test in folds.split(Xs):
        fits = lasso_path(y[train], Xs[train], lambdas, weights, fit_intercept=True, max_df=max_df)
        for i in range(len(lambdas)):
            if i < len(fits):
                errors[i] += np.sum((y[test] - fits[i].predict(Xs[test])) ** 2)
            else:
                errors[i] = np.inf
    return int(np.argmin(errors / n))


def _default_ratio(n, q):
    return 1e-4 if q < n else 1e-2


def fit_on_grid(y, Xs, weights, n_lambda: int = 50, lambda_ratio: float = None, criterion: str = CRITERION_BIC,
                fit_intercept: bool = False, seed: int = 0, ebic_gamma: float = 0.0) -> LassoFit:
    """ weighted Lasso with lambda chosen from a log-spaced grid by BIC or K-fold cross-validation """
    if criterion not in CRITERIA:
        raise ValueError('unknown model selection criterion %s, expected one of %s' % (criterion, CRITERIA))
    n, q = Xs.shape
    ratio = _default_ratio(n, q) if lambda_ratio is None else lambda_ratio
    lambdas = lambda_grid(lambda_max(y, Xs, weights, fit_intercept), n_lambda, ratio)
    max_df = n - 1
    fits = lasso_path(y, Xs, lambdas, weights, fit_intercept=fit_intercept, max_df=max_df)
    if criterion == CRITERION_BIC:
        return fits[_choose_by_bic(y, Xs, fits, ebic_gamma)]
    best = _choose_by_cv(y, Xs, lambdas[:len(fits)], weights, fit_intercept, max_df, seed)
    return fits[best]


def initial_estimate(y, Xs):
    """ OLS when q <= n/2, otherwise ridge with penalty 1e-3 * n """
    y, Xs = _check_inputs(y, Xs)
    n, q = Xs.shape
    if q <= n / 2:
        return ols_fit(y, Xs)[0]
    alpha = RIDGE_PENALTY * n
    if q <= n:
        return scipy.linalg.solve(Xs.T @ Xs + alpha * np.eye(q), Xs.T @ y, assume_a='pos')
    return Xs.T @ scipy.linalg.solve(Xs @ Xs.T + alpha * np.eye(n), y, assume_a='pos')


def adaptive_lasso(y, Xs, gamma: float = 1.0, n_lambda: int = 50, lambda_ratio: float = None,
                   criterion: str = CRITERION_BIC, seed: int = 0, ebic_gamma: float = 0.0):
    """
    weights 1 / (|beta_init| + 1e-6)^gamma, lambda chosen on a log grid;
    ebic_gamma > 0 adds the extended-BIC candidate-count term to the BIC.
    Returns (selected positions within Xs, fit, residuals y - X beta).
    """
    y, Xs = _check_inputs(y, Xs)
    n, q = Xs.shape
    if q == 0:
        empty = LassoFit(np.zeros(0), 0.0, 0.0, np.zeros(0), 0, True, float(y @ y) / (2 * n))
        return ActiveSet((), 0), empty, y.copy()
    weights = 1.0 / (np.abs(initial_estimate(y, Xs)) + WEIGHT_STABILIZER) ** gamma
    fit = fit_on_grid(y, Xs, weights, n_lambda, lambda_ratio, criterion, seed=seed, ebic_gamma=ebic_gamma)
    residuals = y - fit.predict(Xs)
    return ActiveSet(fit.support, q), fit, residuals


def lasso_select(y, Xs, criterion: str = CRITERION_CV, n_lambda: int = 50, lambda_ratio: float = None,
                 seed: int = 0):
    """ plain Lasso (unit weights) over all given columns """
    y, Xs = _check_inputs(y, Xs)
    fit = fit_on_grid(y, Xs, np.ones(Xs.shape[1]), n_lambda, lambda_ratio, criterion, seed=seed)
    return ActiveSet(fit.support, Xs.shape[1]), fit, y - fit.predict(Xs)
