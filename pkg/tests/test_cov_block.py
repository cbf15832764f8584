import math

import numpy as np
import pytest
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from covscreen.cov_block import BlockPartition
from covscreen.cov_block import ThresholdEdges
from covscreen.cov_block import UnionFind
from covscreen.cov_block import default_delta
from covscreen.cov_block import partition_blocks
from covscreen.cov_block import partition_dataset
from covscreen.cov_block import threshold_edges
from covscreen.data_model import Dataset
from covscreen.data_model import standardize
from covscreen.errors import DataError

from conftest import make_dataset
from conftest import orthogonal_design


def block_sets(partition):
    return sorted(tuple(int(j) for j in block) for block in partition.blocks)


class TestDefaultDelta:

    def test_closed_form(self):
        assert default_delta(1000, 10000) == pytest.approx(0.4799, abs=1e-4)
        assert default_delta(math.e, math.e, c=1.0) == pytest.approx(math.sqrt(1 / math.e))

    def test_linear_in_multiplier(self):
        assert default_delta(200, 500, c=10.0) == pytest.approx(2 * default_delta(200, 500, c=5.0))

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            default_delta(1, 10)
        with pytest.raises(ValueError):
            default_delta(10, 10, c=0.0)


class TestThresholdEdges:

    def test_equal_columns(self, rng):
        x = rng.standard_normal(30)
        d = standardize(Dataset(rng.standard_normal(30), np.column_stack([x, x, rng.standard_normal(30)])))
        edges = threshold_edges(d, 0.5)
        assert (0, 1) in edges.pairs()
        weight = edges.weights[edges.pairs().index((0, 1))]
        assert weight == pytest.approx(1.0)

    def test_orthogonal_columns(self, rng):
        d = Dataset(rng.standard_normal(40), orthogonal_design(rng, 40, 10))
        d = standardize(d)
        assert len(threshold_edges(d, 1e-6)) == 0

    @pytest.mark.parametrize('panel_size', [1, 3, 8, 256])
    def test_matches_dense_thresholding(self, rng, panel_size):
        d = make_dataset(rng, 20, 8)
        delta = 0.2
        corr = d.X.T @ d.X / d.n
        rows, cols = np.nonzero(np.triu(np.abs(corr) >= delta, k=1))
        expected = sorted(zip(rows.tolist(), cols.tolist()))
        edges = threshold_edges(d, delta, panel_size=panel_size)
        assert edges.pairs() == expected
        np.testing.assert_allclose(edges.weights, np.abs(corr[rows, cols]))

    def test_thread_count_does_not_change_edges(self, rng):
        d = make_dataset(rng, 30, 40)
        one = threshold_edges(d, 0.25, threads=1, panel_size=7)
        four = threshold_edges(d, 0.25, threads=4, panel_size=7)
        assert one.to_list() == four.to_list()

    def test_requires_standardized(self, rng):
        with pytest.raises(DataError):
            threshold_edges(Dataset(rng.standard_normal(10), rng.standard_normal((10, 3))), 0.5)


class TestUnionFind:

    def test_cap_refuses_merge(self):
        uf = UnionFind(4)
        assert uf.union(0, 1, cap=2)
        assert not uf.union(1, 2, cap=2)
        assert uf.union(2, 3, cap=2)
        assert sorted(sorted(g) for g in uf.groups()) == [[0, 1], [2, 3]]


class TestPartitionBlocks:

    def test_two_components(self):
        edges = ThresholdEdges(0.5, [0, 2], [1, 3], [0.9, 0.8])
        partition = partition_blocks(edges, 4, cap=4)
        assert block_sets(partition) == [(0, 1), (2, 3)]
        assert partition.forced_splits == 0

    def test_no_edges(self):
        partition = partition_blocks(ThresholdEdges(0.5, [], [], []), 4, cap=4)
        assert block_sets(partition) == [(0,), (1,), (2,), (3,)]

    def test_capped_chain(self):
        edges = ThresholdEdges(0.5, list(range(9)), list(range(1, 10)), [0.8] * 9)
        partition = partition_blocks(edges, 10, cap=5)
        assert partition.max_block_size <= 5
        assert block_sets(partition) == [(0, 1, 2, 3, 4), (5, 6, 7, 8, 9)]
        assert partition.forced_splits >= 1

    def test_escalation_keeps_strong_pairs(self):
        # a strong pair {0,1} and {2,3} joined by one weak edge
        edges = ThresholdEdges(0.3, [0, 1, 2], [1, 2, 3], [0.9, 0.35, 0.9])
        partition = partition_blocks(edges, 4, cap=2)
        assert block_sets(partition) == [(0, 1), (2, 3)]
        assert partition.forced_splits == 1

    def test_agrees_with_graph_components(self, rng):
        for _ in range(100):
            p = int(rng.integers(2, 51))
            m = int(rng.integers(0, 2 * p))
            rows = rng.integers(0, p, m)
            cols = rng.integers(0, p, m)
            keep = rows < cols
            pairs = sorted(set(zip(rows[keep].tolist(), cols[keep].tolist())))
            r = np.array([a for a, _ in pairs], dtype=np.int64)
            c = np.array([b for _, b in pairs], dtype=np.int64)
            edges = ThresholdEdges(0.1, r, c, np.full(r.size, 0.5))
            partition = partition_blocks(edges, p)
            graph = coo_matrix((np.ones(r.size), (r, c)), shape=(p, p))
            _, labels = connected_components(graph, directed=False)
            expected = sorted(tuple(np.flatnonzero(labels == g).tolist()) for g in np.unique(labels))
            assert block_sets(partition) == expected

    def test_refinement_under_larger_delta(self, rng):
        for _ in range(10):
            d = make_dataset(rng, 25, 30)
            coarse = partition_blocks(threshold_edges(d, 0.2), d.p)
            fine = partition_blocks(threshold_edges(d, 0.35), d.p)
            for block in fine.blocks:
                assert len(set(coarse.block_of[block].tolist())) == 1

    def test_coverage_and_disjointness(self, rng):
        d = make_dataset(rng, 30, 60)
        partition = partition_dataset(d, delta=0.2, cap=6)
        members = np.concatenate(partition.blocks)
        assert sorted(members.tolist()) == list(range(d.p))
        assert partition.max_block_size <= 6

    @pytest.mark.parametrize("cap", [40, 5])
    def test_column_permutation_permutes_blocks(self, rng, cap):
        d = make_dataset(rng, 25, 40)
        perm = rng.permutation(d.p)
        partition = partition_dataset(d, delta=0.25, cap=cap)
        permuted = partition_dataset(d.columns(perm), delta=0.25, cap=cap)
        mapped = sorted(tuple(sorted(perm[block].tolist())) for block in permuted.blocks)
        assert mapped == block_sets(partition)
        assert permuted.forced_splits == partition.forced_splits


class TestBlockPartition:

    def test_rejects_gaps_and_overlap(self):
        with pytest.raises(ValueError):
            BlockPartition([[0, 1]], 3, 0.5, 3)
        with pytest.raises(ValueError):
            BlockPartition([[0, 1], [1, 2]], 3, 0.5, 3)

    def test_restrict_renumbers(self):
        partition = BlockPartition([[0, 3], [1], [2, 4]], 5, 0.5, 5)
        restricted = partition.restrict([1, 3, 4])
        assert block_sets(restricted) == [(0,), (1,), (2,)]
        restricted = partition.restrict([0, 2, 3, 4])
        assert block_sets(restricted) == [(0, 2), (1, 3)]

    def test_write(self, tmp_path):
        partition = BlockPartition([[0, 2], [1]], 3, 0.5, 3)
        partition.write(str(tmp_path / 'p.csv'), str(tmp_path / 'p.json'))
        text = (tmp_path / 'p.csv').read_text().splitlines()
        assert text == ['variable_index_1based,block_id', '1,1', '2,2', '3,1']
