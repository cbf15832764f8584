# -*- coding:utf-8 -*-

import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

DEFAULT_THREADS = 1
DEFAULT_PANEL_SIZE = 256

# substream kinds, the second element of every seed key
STREAM_RESAMPLE = 1
STREAM_PERMUTATION = 2
STREAM_NULL_RESAMPLE = 3
STREAM_REPLICATE = 4
STREAM_CV = 5
STREAM_ITERATED = 6


def get_default_threads():
    threads_env = os.getenv('COVSCREEN_THREADS')
    if threads_env:
        return max(1, int(threads_env))
    return DEFAULT_THREADS


def get_panel_size():
    panel_env = os.getenv('COVSCREEN_PANEL_SIZE')
    if panel_env:
        return max(1, int(panel_env))
    return DEFAULT_PANEL_SIZE


def seed_sequence(seed, *key):
    return np.random.SeedSequence([int(seed)] + [int(k) for k in key])


def substream(seed, *key) -> np.random.Generator:
    """
    independent generator keyed by (seed, kind, index, ...)
    """
    return np.random.default_rng(seed_sequence(seed, *key))


def derive_seed(seed, *key) -> int:
    return int(seed_sequence(seed, *key).generate_state(1, dtype=np.uint32)[0])


def run_tasks(func, items, threads: int = None):
    """
    apply func to every item, results in input order whatever the worker count
    """
    items = list(items)
    threads = get_default_threads() if threads is None else max(1, int(threads))
    if threads == 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as executor:
        return list(executor.map(func, items))


def default_screen_size(n: int) -> int:
    """ ceil(n / log n), the usual marginal-screening model size """
    if n < 2:
        raise ValueError('n must be at least 2, got %s' % n)
    return max(1, int(math.ceil(n / math.log(n))))


def ranking_order(values):
    """ indices sorted by descending value, ties by ascending index """
    values = np.asarray(values, dtype=float)
    return np.lexsort((np.arange(values.shape[0]), -values))
