# -*- coding:utf-8 -*-

"""
Block-wise semi-partial correlation screening (CIS) and the marginal (SIS)
and projection (HOLP) baselines.
"""

import numpy as np
import pandas as pd
import scipy.linalg

from .cov_block import BlockPartition
from .cov_block import partition_dataset
from .data_model import ActiveSet
from .data_model import Dataset
from .data_model import SelectionResult
from .errors import DataError
from .errors import RankDeficientError
from .errors import ScreeningError
from .log import setup_default_logger
from .utils import default_screen_size
from .utils import ranking_order
from .utils import run_tasks

METHOD_CIS = 'CIS'
METHOD_SIS = 'SIS'
METHOD_HOLP = 'HOLP'

RANK_TOLERANCE = 1e-10
RESIDUAL_TOLERANCE = 1e-12
HOLP_RIDGE = 1e-8

logger = setup_default_logger('covscreen.screening')


class ScreenStats(object):
    """
    per-variable screening statistic magnitudes with the ranking they induce
    """

    def __init__(self, method: str, stats, n: int, partition: BlockPartition = None, signed=None,
                 warnings=None):
        stats = np.asarray(stats, dtype=float)
        if not np.all(np.isfinite(stats)) or np.any(stats < 0):
            raise ScreeningError('%s statistics must be finite and non-negative' % method)
        self.method = method
        self.stats = stats
        self.n = int(n)
        self.partition = partition
        self.signed = None if signed is None else np.asarray(signed, dtype=float)
        self.warnings = list(warnings or [])

    @property
    def p(self) -> int:
        return int(self.stats.size)

    def order(self):
        return ranking_order(self.stats)

    def ranks(self):
        """ 0-based rank of every variable """
        ranks = np.empty(self.p, dtype=np.int64)
        ranks[self.order()] = np.arange(self.p)
        return ranks

    def top(self, k: int) -> ActiveSet:
        return ActiveSet(self.order()[:k], self.p)

    def to_frame(self, names) -> pd.DataFrame:
        if self.partition is not None:
            block_id = self.partition.block_of + 1
        else:
            block_id = [''] * self.p
        return pd.DataFrame({
            'variable_index_1based': np.arange(1, self.p + 1),
            'name': names,
            'method': self.method,
            'statistic': self.stats,
            'rank': self.ranks() + 1,
            'block_id': block_id,
        })

    def write(self, path: str, names):
        self.to_frame(names).to_csv(path, index=False, float_format='%.17g')
        return path

    def __str__(self):
        return 'ScreenStats(method=%s, p=%d, warnings=%d)' % (self.method, self.p, len(self.warnings))


def _response_norm(d: Dataset) -> float:
    norm = float(np.linalg.norm(d.y))
    if norm == 0.0:
        raise ScreeningError('response has zero norm')
    return norm


def semi_partial_oracle(d: Dataset, block, j: int) -> float:
    """
    x_j^T (I - P) y / (sqrt(x_j^T (I - P) x_j) ||y||), P the projection onto the
    other columns of the block, formed from an explicit QR factorization
    """
    block = [int(k) for k in block]
    if j not in block:
        raise ValueError('variable %d is not in the block' % j)
    if len(block) >= d.n:
        raise RankDeficientError('block of size %d needs fewer than n=%d members' % (len(block), d.n))
    y_norm = _response_norm(d)
    xj = d.X[:, j]
    others = [k for k in block if k != j]
    if others:
        Xo = d.X[:, others]
        singular = scipy.linalg.svdvals(Xo)
        if singular[-1] <= RANK_TOLERANCE * singular[0]:
            raise RankDeficientError('rank-deficient block submatrix, smallest singular value=%.3g' % singular[-1],
                                     smallest_singular_value=float(singular[-1]))
        Q, _ = scipy.linalg.qr(Xo, mode='economic')
        residual = xj - Q @ (Q.T @ xj)
    else:
        residual = xj
    denominator = float(residual @ residual)
    if denominator <= RESIDUAL_TOLERANCE * float(xj @ xj):
        raise RankDeficientError('variable %d lies in the span of the rest of its block' % j)
    return float(residual @ d.y) / (np.sqrt(denominator) * y_norm)


def _block_semi_partial(X, y, y_norm, block_id, block):
    if block.size >= X.shape[0]:
        raise RankDeficientError('block %d has %d members for n=%d' % (block_id, block.size, X.shape[0]),
                                 block_id=block_id)
    Xs = X[:, block]
    gram = Xs.T @ Xs
    eigenvalues, eigenvectors = scipy.linalg.eigh(gram)
    keep = eigenvalues > RANK_TOLERANCE * eigenvalues[-1]
    warning = None
    if not keep.all():
        warning = 'block %d gram is near-singular, dropped %d of %d eigenvalues' % (
            block_id, int(np.count_nonzero(~keep)), block.size)
    basis = eigenvectors[:, keep]
    inverse = (basis / eigenvalues[keep]) @ basis.T
    beta = inverse @ (Xs.T @ y)
    diagonal = np.diag(inverse)
    # e_j^T e_j = 1 / inv_jj and e_j^T y = beta_j / inv_jj for the residual e_j of x_j on the rest
    safe = diagonal > 0
    rho = np.zeros(block.size)
    rho[safe] = beta[safe] / (np.sqrt(diagonal[safe]) * y_norm)
    return rho, warning


def semi_partial_all(d: Dataset, part: BlockPartition, threads: int = None) -> ScreenStats:
    """ every block-wise semi-partial correlation, one gram inverse per block """
    if part.p != d.p:
        raise ValueError('partition covers %d predictors, dataset has %d' % (part.p, d.p))
    y_norm = _response_norm(d)
    X = d.X
    signed = np.empty(d.p)

    singletons = np.array([int(b[0]) for b in part.blocks if b.size == 1], dtype=np.int64)
    if singletons.size:
        Xs = X[:, singletons]
        column_norms = np.sqrt(np.einsum('ij,ij->j', Xs, Xs))
        signed[singletons] = (Xs.T @ d.y) / (column_norms * y_norm)

    multi = [(g, block) for g, block in enumerate(part.blocks) if block.size > 1]
    results = run_tasks(lambda item: _block_semi_partial(X, d.y, y_norm, item[0], item[1]), multi, threads)
    warnings = []
    for (g, block), (rho, warning) in zip(multi, results):
        signed[block] = rho
        if warning:
            logger.warning(warning)
            warnings.append(warning)
    return ScreenStats(METHOD_CIS, np.abs(signed), d.n, partition=part, signed=signed, warnings=warnings)


def select(s: ScreenStats, threshold: float = None, top_k: int = None) -> SelectionResult:
    """ {j : stats_j > threshold}, or the top_k ranked variables (default ceil(n / log n)) """
    if threshold is not None and top_k is not None:
        raise ValueError('give either a threshold or top_k, not both')
    if threshold is not None:
        if threshold <= 0:
            raise ValueError('threshold must be positive, got %s' % threshold)
        selected = ActiveSet(np.flatnonzero(s.stats > threshold), s.p)
        return SelectionResult(selected, s.method, float(threshold), SelectionResult.RULE_THRESHOLD)
    if top_k is None:
        top_k = min(s.p, default_screen_size(s.n))
    if top_k < 1 or top_k > s.p:
        raise ValueError('top_k must lie in [1, %d], got %s' % (s.p, top_k))
    return SelectionResult(s.top(int(top_k)), s.method, int(top_k), SelectionResult.RULE_TOP_K)


def cis_screen(s: ScreenStats, threshold: float = None, top_k: int = None) -> SelectionResult:
    if s.method != METHOD_CIS:
        raise ValueError('cis_screen needs CIS statistics, got %s' % s.method)
    return select(s, threshold, top_k)


def _require_standardized(d: Dataset):
    if not d.standardized:
        raise DataError('screening needs a standardized dataset')


def sis_stats(d: Dataset) -> ScreenStats:
    """ |x_j^T y| / (sqrt(n) ||y||) """
    _require_standardized(d)
    y_norm = _response_norm(d)
    signed = (d.X.T @ d.y) / (np.sqrt(d.n) * y_norm)
    return ScreenStats(METHOD_SIS, np.abs(signed), d.n, signed=signed)


def holp_stats(d: Dataset) -> ScreenStats:
    """
    |X^T (X X^T)^+ y| from an n x n solve. Centered columns leave X X^T singular
    along the ones vector, so the system is (X X^T + 1 1^T) z = y, whose
    solution agrees with the pseudo-inverse because y is centered too.
    """
    _require_standardized(d)
    _response_norm(d)
    n, p = d.n, d.p
    X = d.X
    kernel = X @ X.T + 1.0
    warnings = []
    ridge = p < n - 1
    if ridge:
        kernel[np.diag_indices(n)] += HOLP_RIDGE * n
        warnings.append('HOLP ridge fallback, p=%d < n-1=%d' % (p, n - 1))
        logger.warning(warnings[-1])
    try:
        z = scipy.linalg.cho_solve(scipy.linalg.cho_factor(kernel), d.y)
    except np.linalg.LinAlgError:
        z = None
    if z is None or np.linalg.norm(kernel @ z - d.y) > 1e-6 * np.linalg.norm(d.y):
        if ridge:
            raise ScreeningError('X X^T is singular beyond the ridge fallback')
        kernel[np.diag_indices(n)] += HOLP_RIDGE * n
        warnings.append('HOLP ridge fallback, X X^T is singular')
        logger.warning(warnings[-1])
        try:
            z = scipy.linalg.cho_solve(scipy.linalg.cho_factor(kernel), d.y)
        except np.linalg.LinAlgError:
            raise ScreeningError('X X^T is singular beyond the ridge fallback')
    signed = X.T @ z
    return ScreenStats(METHOD_HOLP, np.abs(signed), n, signed=signed, warnings=warnings)


def min_model_size(s: ScreenStats, truth: ActiveSet) -> int:
    """ smallest k whose top-k ranked variables contain the whole true set """
    truth = truth if isinstance(truth, ActiveSet) else ActiveSet(truth)
    if len(truth) == 0:
        raise ValueError('true active set is empty')
    return int(s.ranks()[truth.indices].max()) + 1


class Screener(object):
    METHOD = None

    def __init__(self):
        self.logger = setup_default_logger('covscreen.screener')

    def process(self, d: Dataset) -> ScreenStats:
        raise NotImplementedError

    def raw_process(self, d: Dataset, top_k: int = None, threshold: float = None):
        stats = self.process(d)
        selection = select(stats, threshold=threshold, top_k=top_k)
        self.logger.debug('screened, method=%s, p=%d, selected=%d', self.METHOD, d.p, len(selection.selected))
        return stats, selection


class CisScreener(Screener):
    METHOD = METHOD_CIS

    def __init__(self, delta: float = None, delta_multiplier: float = 5.0, cap: int = None,
                 partition: BlockPartition = None, threads: int = None):
        super(CisScreener, self).__init__()
        self.delta = delta
        self.delta_multiplier = delta_multiplier
        self.cap = cap
        self.partition = partition
        self.threads = threads

    def process(self, d: Dataset) -> ScreenStats:
        partition = self.partition
        if partition is None:
            partition = partition_dataset(d, self.delta, self.cap, self.delta_multiplier, self.threads)
        return semi_partial_all(d, partition, self.threads)


class SisScreener(Screener):
    METHOD = METHOD_SIS

    def __init__(self):
        super(SisScreener, self).__init__()

    def process(self, d: Dataset) -> ScreenStats:
        return sis_stats(d)


class HolpScreener(Screener):
    METHOD = METHOD_HOLP

    def __init__(self):
        super(HolpScreener, self).__init__()

    def process(self, d: Dataset) -> ScreenStats:
        return holp_stats(d)


SCREENER_MAP = {
    METHOD_CIS: CisScreener,
    METHOD_SIS: SisScreener,
    METHOD_HOLP: HolpScreener,
}


def create_screener(method: str, **kwargs) -> Screener:
    method = method.upper()
    if method not in SCREENER_MAP:
        raise ValueError('unknown screening method %s, expected one of %s' % (method, sorted(SCREENER_MAP)))
    if method != METHOD_CIS:
        return SCREENER_MAP[method]()
    return CisScreener(**kwargs)
