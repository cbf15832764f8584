# -*- coding:utf-8 -*-

"""
Thresholded sample correlation support and the block partition of the
predictors it induces.
"""

import json
import math

import numpy as np
import pandas as pd

from .data_model import Dataset
from .errors import DataError
from .log import setup_default_logger
from .utils import get_panel_size
from .utils import run_tasks

ESCALATION_FACTOR = 1.25
SATURATED_CORRELATION = 0.999

logger = setup_default_logger('covscreen.cov_block')


def default_delta(n: int, p: int, c: float = 5.0) -> float:
    """ c * sqrt(log(p) / n) """
    if n < 2 or p < 2:
        raise ValueError('default_delta needs n >= 2 and p >= 2, got n=%s, p=%s' % (n, p))
    if c <= 0:
        raise ValueError('delta multiplier must be positive, got %s' % c)
    return c * math.sqrt(math.log(p) / n)


def default_cap(n: int) -> int:
    return max(2, n // 2)


class ThresholdEdges(object):
    """
    off-diagonal support of the thresholded correlation matrix, pairs j < k
    """

    def __init__(self, delta: float, rows, cols, weights):
        self.delta = float(delta)
        self.rows = np.asarray(rows, dtype=np.int64)
        self.cols = np.asarray(cols, dtype=np.int64)
        self.weights = np.asarray(weights, dtype=float)

    def __len__(self):
        return int(self.rows.size)

    def pairs(self):
        return list(zip(self.rows.tolist(), self.cols.tolist()))

    def to_list(self):
        return list(zip(self.rows.tolist(), self.cols.tolist(), self.weights.tolist()))

    def __str__(self):
        return 'ThresholdEdges(delta=%s, edges=%d)' % (self.delta, len(self))


class BlockPartition(object):

    def __init__(self, blocks, p: int, delta: float, cap: int, forced_splits: int = 0):
        self.blocks = [np.asarray(sorted(block), dtype=np.int64) for block in blocks]
        self.blocks.sort(key=lambda b: int(b[0]))
        self.p = int(p)
        self.delta = delta
        self.cap = int(cap)
        self.forced_splits = int(forced_splits)
        self.block_of = np.full(self.p, -1, dtype=np.int64)
        for g, block in enumerate(self.blocks):
            self.block_of[block] = g
        if np.any(self.block_of < 0):
            raise ValueError('blocks do not cover all %d predictors' % self.p)
        if sum(block.size for block in self.blocks) != self.p:
            raise ValueError('blocks overlap')

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    @property
    def sizes(self):
        return np.array([block.size for block in self.blocks], dtype=np.int64)

    @property
    def max_block_size(self) -> int:
        return int(self.sizes.max()) if self.blocks else 0

    def restrict(self, indices) -> 'BlockPartition':
        """ partition of the sub-design made of the given columns, renumbered 0..len-1 """
        indices = np.asarray(indices, dtype=np.int64)
        position = {int(j): i for i, j in enumerate(indices)}
        blocks = []
        for block in self.blocks:
            kept = [position[int(j)] for j in block if int(j) in position]
            if kept:
                blocks.append(kept)
        return BlockPartition(blocks, indices.size, self.delta, self.cap, self.forced_splits)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'variable_index_1based': np.arange(1, self.p + 1),
            'block_id': self.block_of + 1,
        })

    def to_dict(self):
        return {
            'delta': self.delta,
            'cap': self.cap,
            'forcedSplits': self.forced_splits,
            'blocks': self.n_blocks,
            'maxBlockSize': self.max_block_size,
        }

    def write(self, csv_path: str, json_path: str):
        self.to_frame().to_csv(csv_path, index=False)
        with open(json_path, 'w') as fp:
            json.dump(self.to_dict(), fp, indent=2, sort_keys=True)

    def __str__(self):
        return 'BlockPartition(blocks=%d, max_block_size=%d, delta=%s, cap=%d, forced_splits=%d)' % (
            self.n_blocks, self.max_block_size, self.delta, self.cap, self.forced_splits)


class UnionFind(object):

    def __init__(self, size):
        self.parent = list(range(size))
        self.size = [1] * size

    def find(self, u):
        root = u
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[u] != root:
            self.parent[u], u = root, self.parent[u]
        return root

    def union(self, u, v, cap=None):
        """ merge the sets of u and v; refuse when the merged size would exceed cap """
        root_u = self.find(u)
        root_v = self.find(v)
        if root_u == root_v:
            return True
        if cap is not None and self.size[root_u] + self.size[root_v] > cap:
            return False
        if self.size[root_u] < self.size[root_v]:
            root_u, root_v = root_v, root_u
        self.parent[root_v] = root_u
        self.size[root_u] += self.size[root_v]
        return True

    def groups(self):
        members = {}
        for u in range(len(self.parent)):
            members.setdefault(self.find(u), []).append(u)
        return list(members.values())


def _panel_edges(X, n, a, b, width, delta):
    left = X[:, a:a + width]
    right = X[:, b:b + width]
    corr = left.T @ right / n
    rows, cols = np.nonzero(np.abs(corr) >= delta)
    rows = rows + a
    cols = cols + b
    keep = rows < cols
    rows, cols = rows[keep], cols[keep]
    return rows, cols, np.abs(corr[rows - a, cols - b])


def threshold_edges(d: Dataset, delta: float, threads: int = None, panel_size: int = None) -> ThresholdEdges:
    """
    pairs with |x_j^T x_k / n| >= delta, found by sweeping column panels so the
    full p x p matrix is never held in memory
    """
    if not d.standardized:
        raise DataError('threshold_edges needs a standardized dataset')
    if delta <= 0:
        raise ValueError('delta must be positive, got %s' % delta)
    width = panel_size or get_panel_size()
    starts = list(range(0, d.p, width))
    tasks = [(a, b) for i, a in enumerate(starts) for b in starts[i:]]
    X = d.X
    n = d.n
    results = run_tasks(lambda ab: _panel_edges(X, n, ab[0], ab[1], width, delta), tasks, threads)
    if results:
        rows = np.concatenate([r[0] for r in results])
        cols = np.concatenate([r[1] for r in results])
        weights = np.concatenate([r[2] for r in results])
    else:
        rows = cols = np.empty(0, dtype=np.int64)
        weights = np.empty(0)
    order = np.lexsort((cols, rows))
    edges = ThresholdEdges(delta, rows[order], cols[order], weights[order])
    logger.debug('threshold edges, delta=%s, panels=%d, edges=%d', delta, len(tasks), len(edges))
    return edges


def _components(nodes, rows, cols):
    local = {int(u): i for i, u in enumerate(nodes)}
    uf = UnionFind(len(nodes))
    for u, v in zip(rows.tolist(), cols.tolist()):
        uf.union(local[u], local[v])
    return [np.asarray([nodes[i] for i in group], dtype=np.int64) for group in uf.groups()]


def _capped_components(nodes, rows, cols, weights, cap):
    # strongest edges first, ties by (j, k)
    local = {int(u): i for i, u in enumerate(nodes)}
    uf = UnionFind(len(nodes))
    for e in np.lexsort((cols, rows, -weights)):
        uf.union(local[int(rows[e])], local[int(cols[e])], cap=cap)
    return [np.asarray([nodes[i] for i in group], dtype=np.int64) for group in uf.groups()]


def _edges_within(nodes, rows, cols, weights):
    inside = np.isin(rows, nodes) & np.isin(cols, nodes)
    return rows[inside], cols[inside], weights[inside]


def _split_component(nodes, rows, cols, weights, threshold, cap):
    """ raise the threshold inside one oversized component until its pieces fit the cap """
    done = []
    pending = [(nodes, rows, cols, weights, threshold)]
    while pending:
        nodes, rows, cols, weights, threshold = pending.pop()
        if nodes.size <= cap:
            done.append(nodes)
            continue
        raised = threshold * ESCALATION_FACTOR
        keep = weights >= raised
        saturated = raised > SATURATED_CORRELATION or (weights.size and weights.min() >= SATURATED_CORRELATION)
        if saturated or not keep.any():
            done.extend(_capped_components(nodes, rows, cols, weights, cap))
            continue
        rows, cols, weights = rows[keep], cols[keep], weights[keep]
        for piece in _components(nodes, rows, cols):
            pending.append((piece,) + _edges_within(piece, rows, cols, weights) + (raised,))
    return done


def partition_blocks(e: ThresholdEdges, p: int, cap: int = None) -> BlockPartition:
    """
    connected components of the threshold graph; components larger than cap
    are split by raising the threshold inside them, falling back to a
    size-capped union of the strongest edges
    """
    if cap is None:
        cap = p
    if cap < 1:
        raise ValueError('block size cap must be at least 1, got %s' % cap)
    nodes = np.arange(p, dtype=np.int64)
    blocks = []
    oversized = 0
    for component in _components(nodes, e.rows, e.cols):
        if component.size <= cap:
            blocks.append(component)
            continue
        oversized += 1
        rows, cols, weights = _edges_within(component, e.rows, e.cols, e.weights)
        blocks.extend(_split_component(component, rows, cols, weights, e.delta, cap))
    block_of = np.empty(p, dtype=np.int64)
    for g, block in enumerate(blocks):
        block_of[block] = g
    forced_splits = int(np.count_nonzero(block_of[e.rows] != block_of[e.cols])) if len(e) else 0
    partition = BlockPartition(blocks, p, e.delta, cap, forced_splits)
    if oversized:
        logger.warning('split oversized components, components=%d, cap=%d, forced_splits=%d',
                       oversized, cap, forced_splits)
    return partition


def partition_dataset(d: Dataset, delta: float = None, cap: int = None, delta_multiplier: float = 5.0,
                      threads: int = None) -> BlockPartition:
    """ CIS step 1 on a standardized dataset with the default delta and cap """
    if delta is None:
        delta = default_delta(d.n, max(d.p, 2), delta_multiplier)
    if cap is None:
        cap = default_cap(d.n)
    return partition_blocks(threshold_edges(d, delta, threads), d.p, cap)
