# -*- coding:utf-8 -*-

"""
Simulation designs for the benchmark: block AR(1) Gaussian designs with fixed
supports (models A to D) and the rare-and-weak signal over 4 x 4 correlation
blocks (model E).
"""

import math

import numpy as np
import pandas as pd
import scipy.linalg
import scipy.signal

from .data_model import ActiveSet
from .data_model import Dataset
from .data_model import standardize
from .log import setup_default_logger

MODEL_A = 'A'
MODEL_B = 'B'
MODEL_C = 'C'
MODEL_D = 'D'
MODEL_E = 'E'
MODELS = (MODEL_A, MODEL_B, MODEL_C, MODEL_D, MODEL_E)

BLOCK_AR1_MODELS = (MODEL_A, MODEL_B, MODEL_C, MODEL_D)
VARIABLES_PER_BLOCK = 100
MODEL_D_RHO = 0.9
MODEL_E_BLOCK = 4

SIGNS_A = (1, -1, 1, -1, -1, 1, -1, 1, -1, 1)
SIGNS_B = (1, 1, -1, 1, -1, 1, -1, 1, -1, 1)

logger = setup_default_logger('covscreen.simgen')


class ModelSpec(object):

    def __init__(self, model: str, n: int = None, p: int = None, m: int = None, rho: float = None,
                 beta_mag: float = 1.0, kappa: float = 0.975, pi: float = 0.2, theta: float = 0.35,
                 sigma: float = 1.0, seed: int = 0):
        model = str(model).upper()
        if model not in MODELS:
            raise ValueError('unknown model %s, expected one of %s' % (model, ', '.join(MODELS)))
        if model == MODEL_D and rho is None:
            rho = MODEL_D_RHO
        if p is None or p < 1:
            raise ValueError('model %s needs p >= 1, got %s' % (model, p))
        if sigma < 0:
            raise ValueError('noise scale must be non-negative, got %s' % sigma)
        if model in BLOCK_AR1_MODELS:
            if n is None or n < 2:
                raise ValueError('model %s needs n >= 2, got %s' % (model, n))
            if rho is None:
                raise ValueError('model %s needs rho' % model)
            if not -1 < rho < 1:
                raise ValueError('rho must lie in (-1, 1), got %s' % rho)
            if model != MODEL_C:
                if m is None or m < 1:
                    raise ValueError('model %s needs a block count m >= 1' % model)
                if p != VARIABLES_PER_BLOCK * m:
                    raise ValueError('model %s needs p = %d * m, got p=%d, m=%d' % (
                        model, VARIABLES_PER_BLOCK, p, m))
                if m < 8 and model in (MODEL_A, MODEL_D) or m < 10 and model == MODEL_B:
                    raise ValueError('model %s support does not fit in m=%d blocks' % (model, m))
            elif p < 20:
                raise ValueError('model C needs p >= 20, got %d' % p)
            if model == MODEL_D and beta_mag <= 0:
                raise ValueError('model D needs a positive beta_mag, got %s' % beta_mag)
        else:
            if p % MODEL_E_BLOCK != 0:
                raise ValueError('model E needs p divisible by %d, got %d' % (MODEL_E_BLOCK, p))
            if not 0 < kappa <= 1:
                raise ValueError('kappa must lie in (0, 1], got %s' % kappa)
            if not 0 <= pi <= 1:
                raise ValueError('pi must lie in [0, 1], got %s' % pi)
            if theta <= 0 or 4 * p ** (-theta) > 1:
                raise ValueError('theta=%s leaves no room for null blocks at p=%d' % (theta, p))
            n = int(math.ceil(p ** kappa))
        self.model = model
        self.n = int(n)
        self.p = int(p)
        self.m = m
        self.rho = rho
        self.beta_mag = float(beta_mag)
        self.kappa = float(kappa)
        self.pi = float(pi)
        self.theta = float(theta)
        self.sigma = float(sigma)
        self.seed = int(seed)

    def with_seed(self, seed: int) -> 'ModelSpec':
        return ModelSpec.from_dict(dict(self.to_dict(), seed=seed))

    def to_dict(self):
        return {
            'model': self.model,
            'n': self.n,
            'p': self.p,
            'm': self.m,
            'rho': self.rho,
            'betaMag': self.beta_mag,
            'kappa': self.kappa,
            'pi': self.pi,
            'theta': self.theta,
            'sigma': self.sigma,
            'seed': self.seed,
        }

    @classmethod
    def from_dict(cls, d):
        return ModelSpec(d['model'], n=d.get('n'), p=d.get('p'), m=d.get('m'), rho=d.get('rho'),
                         beta_mag=d.get('betaMag', 1.0), kappa=d.get('kappa', 0.975), pi=d.get('pi', 0.2),
                         theta=d.get('theta', 0.35), sigma=d.get('sigma', 1.0), seed=d.get('seed', 0))

    def __str__(self):
        return 'ModelSpec(%s)' % ', '.join('%s=%s' % (k, v) for k, v in self.to_dict().items() if v is not None)


class SimTruth(object):

    def __init__(self, beta, sigma: float, block_k=None):
        self.beta = np.asarray(beta, dtype=float)
        self.support = ActiveSet(np.flatnonzero(self.beta), self.beta.size)
        self.sigma = float(sigma)
        self.block_k = None if block_k is None else np.asarray(block_k, dtype=np.int64)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'index_1based': np.arange(1, self.beta.size + 1),
            'beta': self.beta,
        })

    def write(self, path: str):
        self.to_frame().to_csv(path, index=False, float_format='%.17g')
        return path

    def __str__(self):
        return 'SimTruth(p=%d, support=%s, sigma=%s)' % (self.beta.size, self.support.to_list(), self.sigma)


def model_support(spec: ModelSpec, rng: np.random.Generator = None):
    """ 0-based support positions and coefficients of models A to D """
    if spec.model in (MODEL_A, MODEL_D):
        width = spec.p // spec.m
        positions = [0, 1, width, width + 1] + [g * width for g in range(2, 8)]
        magnitude = spec.beta_mag if spec.model == MODEL_D else 1.0
        return np.array(positions), magnitude * np.array(SIGNS_A, dtype=float)
    if spec.model == MODEL_B:
        width = spec.p // spec.m
        return np.array([g * width for g in range(10)]), np.array(SIGNS_B, dtype=float)
    if spec.model == MODEL_C:
        if rng is None:
            raise ValueError('model C draws its support and needs a generator')
        return _model_c_positions(spec.p, rng), np.array(SIGNS_A, dtype=float)
    raise ValueError('model %s has no fixed support layout' % spec.model)


def _model_c_positions(p, rng):
    # j1, j1+1, j2, j2+1, j3..j8, all distinct
    while True:
        draws = rng.choice(p - 1, size=8, replace=False)
        positions = [draws[0], draws[0] + 1, draws[1], draws[1] + 1] + list(draws[2:])
        if len(set(int(j) for j in positions)) == len(positions):
            return np.array(positions, dtype=np.int64)


def _ar1_chain(rng, n, length, rho):
    """ rows of a stationary AR(1) sequence with unit variance and lag-1 correlation rho """
    z = rng.standard_normal((n, length))
    scale = math.sqrt(1.0 - rho * rho)
    z[:, 0] /= scale
    return scipy.signal.lfilter([scale], [1.0, -rho], z, axis=1)


def gen_block_ar1(spec: ModelSpec):
    """
    models A to D: independent AR(1) blocks of width p/m (one global chain for
    model C), y = X beta + sigma * eps, returned standardized
    """
    if spec.model not in BLOCK_AR1_MODELS:
        raise ValueError('gen_block_ar1 handles models A to D, got %s' % spec.model)
    rng = np.random.default_rng(spec.seed)
    if spec.model == MODEL_C:
        X = _ar1_chain(rng, spec.n, spec.p, spec.rho)
    else:
        width = spec.p // spec.m
        X = np.empty((spec.n, spec.p), order='F')
        for g in range(spec.m):
            X[:, g * width:(g + 1) * width] = _ar1_chain(rng, spec.n, width, spec.rho)
    positions, coefficients = model_support(spec, rng)
    beta = np.zeros(spec.p)
    beta[positions] = coefficients
    y = X @ beta + spec.sigma * rng.standard_normal(spec.n)
    truth = SimTruth(beta, spec.sigma)
    logger.debug('generated block ar1 design, spec=%s, support=%s', spec, truth.support.one_based())
    return standardize(Dataset(y, X)), truth


def model_e_correlation():
    """
    I(j=j') + 0.4 I(|j-j'|=1) sign(6-j-j') + 0.05 I(|j-j'|>2) sign(5.5-j-j')
    for 1-based j, j' in 1..4
    """
    size = MODEL_E_BLOCK
    corr = np.eye(size)
    for j in range(1, size + 1):
        for k in range(1, size + 1):
            gap = abs(j - k)
            if gap == 1:
                assert 6 - j - k != 0
                corr[j - 1, k - 1] = 0.4 * np.sign(6 - j - k)
            elif gap > 2:
                corr[j - 1, k - 1] = 0.05 * np.sign(5.5 - j - k)
    if np.linalg.eigvalsh(corr).min() <= 0:
        raise ValueError('model E block correlation is not positive definite')
    return corr


def _block_categories(n_blocks, p, theta, pi, rng):
    """ per-block nonzero count k, category sizes by largest-remainder rounding """
    rate = p ** (-theta)
    fractions = np.array([1.0 - 4.0 * rate, 4.0 * (1.0 - pi) * rate, 4.0 * pi * rate])
    raw = fractions * n_blocks
    counts = np.floor(raw).astype(np.int64)
    remainder = n_blocks - int(counts.sum())
    counts[np.argsort(-(raw - counts), kind='stable')[:remainder]] += 1
    labels = np.repeat(np.arange(3), counts)
    rng.shuffle(labels)
    block_k = np.where(labels == 0, 0, 1)
    heavy = labels == 2
    block_k[heavy] = rng.integers(2, MODEL_E_BLOCK + 1, size=int(heavy.sum()))
    return block_k


def gen_model_e(spec: ModelSpec):
    """
    model E: n = ceil(p^kappa), 4 x 4 correlated blocks, beta = b * mu with
    magnitudes at tau = sqrt(6 log p) w.p. 0.8 and tau (1 + V / 6), V ~ chi2(1),
    otherwise, and random signs
    """
    if spec.model != MODEL_E:
        raise ValueError('gen_model_e handles model E, got %s' % spec.model)
    rng = np.random.default_rng(spec.seed)
    n, p = spec.n, spec.p
    n_blocks = p // MODEL_E_BLOCK
    factor = scipy.linalg.cholesky(model_e_correlation(), lower=False)
    X = np.empty((n, p), order='F')
    for g in range(n_blocks):
        X[:, g * MODEL_E_BLOCK:(g + 1) * MODEL_E_BLOCK] = rng.standard_normal((n, MODEL_E_BLOCK)) @ factor

    tau = math.sqrt(6.0 * math.log(p))
    block_k = _block_categories(n_blocks, p, spec.theta, spec.pi, rng)
    beta = np.zeros(p)
    for g in np.flatnonzero(block_k):
        positions = g * MODEL_E_BLOCK + rng.choice(MODEL_E_BLOCK, size=int(block_k[g]), replace=False)
        magnitudes = np.where(rng.random(positions.size) < 0.8, tau,
                              tau * (1.0 + rng.chisquare(1, positions.size) / 6.0))
        beta[positions] = rng.choice([-1.0, 1.0], size=positions.size) * magnitudes
    y = X @ beta + spec.sigma * rng.standard_normal(n)
    truth = SimTruth(beta, spec.sigma, block_k=block_k)
    logger.debug('generated model E design, n=%d, p=%d, tau=%.4f, signal_blocks=%d',
                 n, p, tau, int(np.count_nonzero(block_k)))
    return standardize(Dataset(y, X)), truth


def generate(spec: ModelSpec):
    if spec.model == MODEL_E:
        return gen_model_e(spec)
    return gen_block_ar1(spec)
