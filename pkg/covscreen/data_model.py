# -*- coding:utf-8 -*-

"""
Core data types shared by every other module: the regression dataset, index
sets of predictors and screening/selection outcomes, plus CSV ingestion.

Indices are 0-based in memory. Everything written to disk is 1-based.
"""

import os

import numpy as np
import pandas as pd

from .errors import ConstantColumnError
from .errors import DataError
from .log import setup_default_logger

STANDARDIZE_TOLERANCE = 1e-10

logger = setup_default_logger('covscreen.data_model')


def _frozen(array):
    array.setflags(write=False)
    return array


class Dataset(object):
    """
    response vector y (length n) and design matrix X (n x p, column-major)
    """

    def __init__(self, y, X, names=None, standardized: bool = False):
        y = np.array(y, dtype=float)
        X = np.array(X, dtype=float, order='F')
        if y.ndim != 1:
            raise DataError('response must be a vector, got shape %s' % (y.shape,))
        if X.ndim != 2:
            raise DataError('design must be a matrix, got shape %s' % (X.shape,))
        if X.shape[0] != y.shape[0]:
            raise DataError('response has %d rows but design has %d' % (y.shape[0], X.shape[0]))
        if y.shape[0] < 2:
            raise DataError('need at least 2 samples, got %d' % y.shape[0])
        if X.shape[1] < 1:
            raise DataError('need at least 1 predictor')
        if not np.all(np.isfinite(y)):
            raise DataError('response has non-finite entries')
        if not np.all(np.isfinite(X)):
            raise DataError('design has non-finite entries')
        if names is None:
            names = ['x%d' % (j + 1) for j in range(X.shape[1])]
        names = [str(name) for name in names]
        if len(names) != X.shape[1]:
            raise DataError('got %d names for %d predictors' % (len(names), X.shape[1]))
        if standardized:
            _check_standardized(X)
        self.y = _frozen(y)
        self.X = _frozen(X)
        self.names = names
        self.standardized = bool(standardized)

    @classmethod
    def _wrap(cls, y, X, names, standardized):
        # trusted internal path: arrays already validated elsewhere
        d = cls.__new__(cls)
        d.y = y if not y.flags.writeable else _frozen(y)
        d.X = X if not X.flags.writeable else _frozen(X)
        d.names = names
        d.standardized = standardized
        return d

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def columns(self, indices) -> 'Dataset':
        indices = np.asarray(indices, dtype=np.int64)
        X = np.asfortranarray(self.X[:, indices])
        return Dataset._wrap(self.y, X, [self.names[j] for j in indices], self.standardized)

    def with_response(self, y) -> 'Dataset':
        y = np.array(y, dtype=float)
        if y.shape != self.y.shape:
            raise DataError('response has shape %s, expected %s' % (y.shape, self.y.shape))
        if not np.all(np.isfinite(y)):
            raise DataError('response has non-finite entries')
        return Dataset._wrap(y, self.X, self.names, self.standardized)

    def take_rows(self, rows) -> 'Dataset':
        """ rows of y and X jointly; the result is not standardized """
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(self.y[rows], self.X[rows], self.names, standardized=False)

    def to_frame(self, response_column: str = 'y') -> pd.DataFrame:
        if response_column in self.names:
            raise DataError('response column %s collides with a predictor name' % response_column,
                            column=response_column)
        frame = pd.DataFrame(self.X, columns=self.names)
        frame.insert(0, response_column, self.y)
        return frame

    def __str__(self):
        return 'Dataset(n=%d, p=%d, standardized=%s)' % (self.n, self.p, self.standardized)


def _check_standardized(X):
    n = X.shape[0]
    means = X.mean(axis=0)
    scales = np.einsum('ij,ij->j', X, X) / n
    if np.max(np.abs(means)) > STANDARDIZE_TOLERANCE or np.max(np.abs(scales - 1.0)) > STANDARDIZE_TOLERANCE:
        raise DataError('design is flagged standardized but columns are not mean 0 with x_j^T x_j = n')


class ActiveSet(object):
    """
    sorted set of predictor indices in [0, p)
    """

    def __init__(self, indices=(), p: int = None):
        indices = np.unique(np.asarray(list(indices) if not isinstance(indices, np.ndarray) else indices,
                                       dtype=np.int64))
        if indices.size and indices[0] < 0:
            raise ValueError('negative predictor index %d' % indices[0])
        if p is not None and indices.size and indices[-1] >= p:
            raise ValueError('predictor index %d out of range for p=%d' % (indices[-1], p))
        self.indices = _frozen(indices)
        self.p = p

    def __len__(self):
        return int(self.indices.size)

    def __iter__(self):
        return iter(self.to_list())

    def __contains__(self, j):
        position = np.searchsorted(self.indices, j)
        return position < self.indices.size and self.indices[position] == j

    def __eq__(self, other):
        if isinstance(other, ActiveSet):
            return np.array_equal(self.indices, other.indices)
        try:
            return np.array_equal(self.indices, ActiveSet(other).indices)
        except (TypeError, ValueError):
            return NotImplemented

    def __ne__(self, other):
        result = self.__eq__(other)
        return result if result is NotImplemented else not result

    __hash__ = None

    def union(self, other) -> 'ActiveSet':
        return ActiveSet(np.union1d(self.indices, ActiveSet(other).indices), self.p)

    def difference(self, other) -> 'ActiveSet':
        return ActiveSet(np.setdiff1d(self.indices, ActiveSet(other).indices), self.p)

    def intersection(self, other) -> 'ActiveSet':
        return ActiveSet(np.intersect1d(self.indices, ActiveSet(other).indices), self.p)

    def issubset(self, other) -> bool:
        return bool(np.all(np.isin(self.indices, ActiveSet(other).indices)))

    def to_list(self):
        return [int(j) for j in self.indices]

    def one_based(self):
        return [int(j) + 1 for j in self.indices]

    def to_dict(self):
        return {'indices': self.one_based(), 'p': self.p}

    @classmethod
    def from_dict(cls, d):
        return ActiveSet([int(j) - 1 for j in d.get('indices', [])], d.get('p'))

    def __str__(self):
        return 'ActiveSet(%s)' % self.to_list()

    __repr__ = __str__


class SelectionResult(object):
    RULE_THRESHOLD = 'threshold'
    RULE_TOP_K = 'top_k'
    RULE_FREQUENCY = 'frequency'

    def __init__(self, selected: ActiveSet, statistic_used: str, threshold, rule: str = RULE_THRESHOLD):
        self.selected = selected
        self.statistic_used = statistic_used
        self.threshold = threshold
        self.rule = rule

    def to_dict(self):
        return {
            'selected': self.selected.one_based(),
            'statisticUsed': self.statistic_used,
            'threshold': self.threshold,
            'rule': self.rule,
        }

    def to_frame(self, names) -> pd.DataFrame:
        return pd.DataFrame({
            'variable_index_1based': self.selected.one_based(),
            'name': [names[j] for j in self.selected],
        })

    def __str__(self):
        return 'SelectionResult(statistic_used=%s, rule=%s, threshold=%s, selected=%s)' % (
            self.statistic_used, self.rule, self.threshold, self.selected.to_list())


def standardize(d: Dataset) -> Dataset:
    """
    center every column and scale it to x_j^T x_j = n (denominator n);
    the response is centered but keeps its scale
    """
    X = d.X
    means = X.mean(axis=0)
    centered = X - means
    scales = np.sqrt(np.einsum('ij,ij->j', centered, centered) / d.n)
    constant = np.flatnonzero(scales <= 1e-12 * np.maximum(1.0, np.abs(means)))
    if constant.size:
        raise ConstantColumnError(int(constant[0]))
    X_std = np.asfortranarray(centered / scales)
    y_std = d.y - d.y.mean()
    return Dataset._wrap(_frozen(y_std), _frozen(X_std), list(d.names), True)


def load_csv(path: str, response_column: str) -> Dataset:
    if not os.path.isfile(path):
        raise DataError('file not found: %s' % path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise DataError('file has no header row: %s' % path)
    if response_column not in frame.columns:
        raise DataError('response column %s not found in header of %s' % (response_column, path),
                        column=response_column)
    values = frame.apply(pd.to_numeric, errors='coerce').to_numpy(dtype=float)
    bad = ~np.isfinite(values)
    if bad.any():
        row, col = np.argwhere(bad)[0]
        column = frame.columns[col]
        raise DataError('non-numeric cell at row %d, column %s: %r' % (row + 1, column, frame.iat[row, col]),
                        row=int(row) + 1, column=column)
    if values.shape[0] < 2:
        raise DataError('need at least 2 data rows in %s, got %d' % (path, values.shape[0]))
    response_position = list(frame.columns).index(response_column)
    predictors = [c for i, c in enumerate(frame.columns) if i != response_position]
    X = np.delete(values, response_position, axis=1)
    logger.info('loaded dataset, path=%s, n=%d, p=%d', path, X.shape[0], X.shape[1])
    return Dataset(values[:, response_position], X, predictors, standardized=False)


def write_csv(d: Dataset, path: str, response_column: str = 'y'):
    d.to_frame(response_column).to_csv(path, index=False, float_format='%.17g')
    return path


def write_selection(result: SelectionResult, names, path: str):
    result.to_frame(names).to_csv(path, index=False)
    return path

