# -*- coding:utf-8 -*-

"""
Iterative covariance-insured screening: bootstrap resamples, screen then
adaptive-Lasso select then re-screen residuals within each resample, selection
frequencies across resamples, and a permutation-calibrated frequency cutoff.
"""

import numpy as np
import pandas as pd

from .cov_block import BlockPartition
from .cov_block import partition_dataset
from .data_model import ActiveSet
from .data_model import Dataset
from .data_model import SelectionResult
from .data_model import standardize
from .errors import ConstantColumnError
from .errors import DataError
from .errors import ResampleError
from .log import setup_default_logger
from .regression import CRITERIA
from .regression import CRITERION_BIC
from .regression import adaptive_lasso
from .screening import METHOD_CIS
from .screening import SCREENER_MAP
from .screening import create_screener
from .utils import STREAM_NULL_RESAMPLE
from .utils import STREAM_PERMUTATION
from .utils import STREAM_RESAMPLE
from .utils import default_screen_size
from .utils import run_tasks
from .utils import substream

MAX_REDRAWS = 10
RESIDUAL_FLOOR = 1e-12
# weight of the candidate-count term in the per-iteration extended BIC
EBIC_GAMMA = 1.0

logger = setup_default_logger('covscreen.icis')


class IcisParams(object):

    def __init__(self, B: int = 50, max_iter: int = 5, screen_k: int = None, delta: float = None,
                 delta_multiplier: float = 5.0, cap: int = None, seed: int = 0, screener: str = METHOD_CIS,
                 freeze_partition: bool = False, criterion: str = CRITERION_BIC, gamma: float = 1.0,
                 n_lambda: int = 50, lambda_ratio: float = None, null_B: int = None, threads: int = None,
                 ebic_gamma: float = EBIC_GAMMA):
        if B < 1:
            raise ValueError('B must be at least 1, got %s' % B)
        if max_iter < 1:
            raise ValueError('max_iter must be at least 1, got %s' % max_iter)
        if screen_k is not None and screen_k < 1:
            raise ValueError('screen_k must be at least 1, got %s' % screen_k)
        if delta is not None and delta <= 0:
            raise ValueError('delta must be positive, got %s' % delta)
        if cap is not None and cap < 1:
            raise ValueError('cap must be at least 1, got %s' % cap)
        if screener.upper() not in SCREENER_MAP:
            raise ValueError('unknown screener %s' % screener)
        if criterion not in CRITERIA:
            raise ValueError('unknown criterion %s' % criterion)
        if null_B is not None and null_B < 1:
            raise ValueError('null_B must be at least 1, got %s' % null_B)
        if ebic_gamma < 0:
            raise ValueError('ebic_gamma must be non-negative, got %s' % ebic_gamma)
        self.B = int(B)
        self.max_iter = int(max_iter)
        self.screen_k = screen_k
        self.delta = delta
        self.delta_multiplier = float(delta_multiplier)
        self.cap = cap
        self.seed = int(seed)
        self.screener = screener.upper()
        self.freeze_partition = bool(freeze_partition)
        self.criterion = criterion
        self.gamma = float(gamma)
        self.n_lambda = int(n_lambda)
        self.lambda_ratio = lambda_ratio
        self.null_B = null_B
        self.threads = threads
        self.ebic_gamma = float(ebic_gamma)

    def resolved_screen_k(self, n: int) -> int:
        return self.screen_k if self.screen_k is not None else default_screen_size(n)

    def null_resamples(self) -> int:
        return self.null_B if self.null_B is not None else max(10, self.B // 5)

    def copy(self, **changes) -> 'IcisParams':
        values = {
            'B': self.B, 'max_iter': self.max_iter, 'screen_k': self.screen_k, 'delta': self.delta,
            'delta_multiplier': self.delta_multiplier, 'cap': self.cap, 'seed': self.seed,
            'screener': self.screener, 'freeze_partition': self.freeze_partition, 'criterion': self.criterion,
            'gamma': self.gamma, 'n_lambda': self.n_lambda, 'lambda_ratio': self.lambda_ratio,
            'null_B': self.null_B, 'threads': self.threads,
            'ebic_gamma': self.ebic_gamma,
        }
        values.update(changes)
        return IcisParams(**values)

    def to_dict(self):
        return {
            'B': self.B,
            'maxIter': self.max_iter,
            'screenK': self.screen_k,
            'delta': self.delta,
            'deltaMultiplier': self.delta_multiplier,
            'cap': self.cap,
            'seed': self.seed,
            'screener': self.screener,
            'freezePartition': self.freeze_partition,
            'criterion': self.criterion,
            'gamma': self.gamma,
            'nLambda': self.n_lambda,
            'lambdaRatio': self.lambda_ratio,
            'nullB': self.null_B,
            'ebicGamma': self.ebic_gamma,
        }

    @classmethod
    def from_dict(cls, d):
        params = IcisParams()
        for name, value in d.items():
            if name == 'B':
                params.B = int(value)
            elif name == 'maxIter':
                params.max_iter = int(value)
            elif name == 'screenK':
                params.screen_k = value
            elif name == 'delta':
                params.delta = value
            elif name == 'deltaMultiplier':
                params.delta_multiplier = float(value)
            elif name == 'cap':
                params.cap = value
            elif name == 'seed':
                params.seed = int(value)
            elif name == 'screener':
                params.screener = value
            elif name == 'freezePartition':
                params.freeze_partition = bool(value)
            elif name == 'criterion':
                params.criterion = value
            elif name == 'gamma':
                params.gamma = float(value)
            elif name == 'nLambda':
                params.n_lambda = int(value)
            elif name == 'lambdaRatio':
                params.lambda_ratio = value
            elif name == 'nullB':
                params.null_B = value
            elif name == 'ebicGamma':
                params.ebic_gamma = float(value)
        return params.copy()

    def __str__(self):
        return 'IcisParams(%s)' % ', '.join('%s=%s' % (k, v) for k, v in self.to_dict().items())


class FrequencyTable(object):
    """
    how often each variable was selected across B resamples
    """

    def __init__(self, counts, B: int):
        self.counts = np.asarray(counts, dtype=np.int64)
        self.B = int(B)
        if np.any(self.counts < 0) or np.any(self.counts > self.B):
            raise ValueError('selection counts must lie in [0, B]')

    @property
    def psi_hat(self):
        return self.counts / self.B

    @property
    def p(self) -> int:
        return int(self.counts.size)

    def at_least(self, psi: float):
        """ mask of variables selected in at least psi * B resamples """
        return self.counts >= psi * self.B - 1e-9

    def to_frame(self, names=None) -> pd.DataFrame:
        names = names or ['x%d' % (j + 1) for j in range(self.p)]
        return pd.DataFrame({
            'variable_index_1based': np.arange(1, self.p + 1),
            'name': names,
            'count': self.counts,
            'psi_hat': self.psi_hat,
        })

    def write(self, path: str, names=None):
        self.to_frame(names).to_csv(path, index=False, float_format='%.17g')
        return path

    def __str__(self):
        return 'FrequencyTable(p=%d, B=%d, ever_selected=%d)' % (self.p, self.B, int(np.count_nonzero(self.counts)))


class FdrCurve(object):

    def __init__(self, thresholds, fdr_hat, chosen_psi: float, q: float, raw_fdr=None, observed=None,
                 null_mean=None):
        self.thresholds = np.asarray(thresholds, dtype=float)
        self.fdr_hat = np.asarray(fdr_hat, dtype=float)
        self.chosen_psi = float(chosen_psi)
        self.q = float(q)
        self.raw_fdr = self.fdr_hat if raw_fdr is None else np.asarray(raw_fdr, dtype=float)
        self.observed = observed
        self.null_mean = null_mean

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({
            'psi': self.thresholds,
            'fdr_hat': self.fdr_hat,
            'fdr_raw': self.raw_fdr,
        })
        if self.observed is not None:
            frame['selected'] = self.observed
        if self.null_mean is not None:
            frame['null_mean'] = self.null_mean
        return frame

    def write(self, path: str):
        self.to_frame().to_csv(path, index=False, float_format='%.17g')
        return path

    def to_dict(self):
        return {'q': self.q, 'chosenPsi': self.chosen_psi, 'grid': len(self.thresholds)}

    def __str__(self):
        return 'FdrCurve(q=%s, chosen_psi=%s)' % (self.q, self.chosen_psi)


def _require_standardized(d: Dataset):
    if not d.standardized:
        raise DataError('ICIS needs a standardized dataset')


def _screen_candidates(sub: Dataset, params: IcisParams, partition: BlockPartition, remaining, k):
    if params.screener == METHOD_CIS:
        if partition is not None:
            screener = create_screener(METHOD_CIS, partition=partition.restrict(remaining))
        else:
            screener = create_screener(METHOD_CIS, delta=params.delta, delta_multiplier=params.delta_multiplier,
                                       cap=params.cap)
    else:
        screener = create_screener(params.screener)
    stats = screener.process(sub)
    return remaining[stats.order()[:k]]


def icis_single(d: Dataset, params: IcisParams, rng: np.random.Generator = None,
                partition: BlockPartition = None) -> ActiveSet:
    """
    screen, select by adaptive Lasso, then re-screen the unselected variables
    against the centered residuals; stops when an iteration adds nothing new
    or after max_iter iterations. Returns the union of all selections.
    """
    _require_standardized(d)
    rng = rng if rng is not None else np.random.default_rng(params.seed)
    p = d.p
    screen_k = params.resolved_screen_k(d.n)
    all_indices = np.arange(p)
    selected = ActiveSet((), p)
    response = d.y
    y_norm = np.linalg.norm(d.y)
    for iteration in range(params.max_iter):
        remaining = np.setdiff1d(all_indices, selected.indices)
        centered = response - response.mean()
        if remaining.size == 0 or np.linalg.norm(centered) <= RESIDUAL_FLOOR * y_norm:
            break
        sub = d.columns(remaining).with_response(centered)
        candidates = _screen_candidates(sub, params, partition, remaining, min(screen_k, remaining.size))
        model = np.union1d(selected.indices, candidates)
        fit_seed = int(rng.integers(0, 2 ** 31 - 1))
        chosen, fit, residuals = adaptive_lasso(d.y, d.X[:, model], params.gamma, params.n_lambda,
                                                params.lambda_ratio, params.criterion, seed=fit_seed,
                                                ebic_gamma=params.ebic_gamma)
        picked = ActiveSet(model[chosen.indices], p)
        new = picked.difference(selected)
        selected = selected.union(picked)
        logger.debug('icis iteration, iteration=%d, candidates=%d, picked=%d, new=%d',
                     iteration + 1, candidates.size, len(picked), len(new))
        if len(new) == 0:
            break
        response = residuals
    return selected


def _bootstrap_selection(d: Dataset, params: IcisParams, stream_key, partition):
    rng = substream(params.seed, *stream_key)
    for attempt in range(MAX_REDRAWS + 1):
        rows = rng.integers(0, d.n, d.n)
        try:
            sample = standardize(d.take_rows(rows))
        except ConstantColumnError as e:
            logger.warning('bootstrap draw has a constant column, redrawing, key=%s, attempt=%d, error=%s',
                           stream_key, attempt + 1, e)
            continue
        return icis_single(sample, params, rng, partition)
    raise ResampleError('bootstrap draws kept producing constant columns, key=%s' % (stream_key,))


def _frequencies(d: Dataset, params: IcisParams, B: int, key_prefix, threads) -> FrequencyTable:
    partition = None
    if params.freeze_partition and params.screener == METHOD_CIS:
        partition = partition_dataset(d, params.delta, params.cap, params.delta_multiplier)
    selections = run_tasks(lambda r: _bootstrap_selection(d, params, tuple(key_prefix) + (r,), partition),
                           range(B), threads)
    counts = np.zeros(d.p, dtype=np.int64)
    for selection in selections:
        counts[selection.indices] += 1
    return FrequencyTable(counts, B)


def icis_resample(d: Dataset, params: IcisParams, threads: int = None) -> FrequencyTable:
    """ selection frequencies over B bootstrap resamples; resample r draws from substream (seed, r) """
    _require_standardized(d)
    threads = params.threads if threads is None else threads
    table = _frequencies(d, params, params.B, (STREAM_RESAMPLE,), threads)
    logger.info('icis resampling done, B=%d, ever_selected=%d', params.B, int(np.count_nonzero(table.counts)))
    return table


def select_by_frequency(f: FrequencyTable, psi: float) -> SelectionResult:
    """ {j : psi_hat_j >= psi}; psi above 1 selects nothing """
    if psi <= 0:
        raise ValueError('frequency threshold must be positive, got %s' % psi)
    selected = ActiveSet(np.flatnonzero(f.at_least(psi)), f.p)
    return SelectionResult(selected, 'ICIS', float(psi), SelectionResult.RULE_FREQUENCY)


def fdr_curve(observed: FrequencyTable, null_tables, q: float) -> FdrCurve:
    """
    plug-in FDR per grid threshold psi in {1/B, ..., 1}: mean null count over
    permutations divided by the observed count, made non-increasing in psi by a
    running minimum from the bottom of the grid
    """
    if not 0 < q < 1:
        raise ValueError('target rate q must lie in (0, 1), got %s' % q)
    B = observed.B
    thresholds = np.arange(1, B + 1) / B
    selected = np.array([int(np.count_nonzero(observed.at_least(psi))) for psi in thresholds])
    if null_tables:
        null_mean = np.array([np.mean([np.count_nonzero(t.at_least(psi)) for t in null_tables])
                              for psi in thresholds])
    else:
        null_mean = np.zeros(B)
    raw = null_mean / np.maximum(1, selected)
    monotone = np.minimum.accumulate(raw)
    passing = np.flatnonzero(monotone <= q)
    chosen = thresholds[passing[0]] if passing.size else 1.0 + 1.0 / B
    return FdrCurve(thresholds, monotone, chosen, q, raw_fdr=raw, observed=selected, null_mean=null_mean)


def permutation_fdr(d: Dataset, q: float, params: IcisParams, n_perm: int = 20, observed: FrequencyTable = None,
                    threads: int = None) -> FdrCurve:
    """
    null selection frequencies from n_perm permutations of y, each run with
    the reduced resample count params.null_resamples()
    """
    _require_standardized(d)
    if not 0 < q < 1:
        raise ValueError('target rate q must lie in (0, 1), got %s' % q)
    if n_perm < 1:
        raise ValueError('n_perm must be at least 1, got %s' % n_perm)
    threads = params.threads if threads is None else threads
    if observed is None:
        observed = icis_resample(d, params, threads)
    null_B = params.null_resamples()
    null_tables = []
    for m in range(n_perm):
        rng = substream(params.seed, STREAM_PERMUTATION, m)
        permuted = d.with_response(rng.permutation(d.y))
        null_tables.append(_frequencies(permuted, params, null_B, (STREAM_NULL_RESAMPLE, m), threads))
    curve = fdr_curve(observed, null_tables, q)
    logger.info('permutation fdr done, n_perm=%d, null_B=%d, q=%s, chosen_psi=%s',
                n_perm, null_B, q, curve.chosen_psi)
    return curve


def run_icis(d: Dataset, params: IcisParams, q: float = 0.1, n_perm: int = 20, threads: int = None):
    """ frequencies, calibrated threshold and final selection in one call """
    observed = icis_resample(d, params, threads)
    curve = permutation_fdr(d, q, params, n_perm, observed, threads)
    return observed, curve, select_by_frequency(observed, curve.chosen_psi)
