import numpy as np
import pytest

from retrieval.index import Index, RankedList, build_index
from tests.oracles import naive_knn
from utils.descriptors import DescriptorSet
from utils.errors import DimensionMismatchError, ValidationError


def _as_pairs(ranked):
    return [(item_id, distance) for item_id, distance in ranked]


def test_matches_naive_sort_oracle():
    rng = np.random.default_rng(31)
    for _ in range(300):
        n = int(rng.integers(1, 51))
        d = int(rng.integers(1, 9))
        # Small integer grids produce many exact distance ties.
        data = rng.integers(-2, 3, size=(n, d)).astype(np.float64)
        ids = ['%03d' % i for i in rng.permutation(n)]
        index = Index(DescriptorSet(ids, data))
        query = rng.integers(-2, 3, size=d).astype(np.float64)
        k = int(rng.integers(1, n + 2))
        exclude = set(rng.choice(ids, size=int(rng.integers(0, 3))))
        ranked = index.query(query, k, exclude)
        assert _as_pairs(ranked) == naive_knn(ids, data, query, k, exclude)


def test_batch_matches_single_queries(make_set):
    database = make_set(60, 5, seed=1)
    queries = make_set(13, 5, seed=2, prefix='q')
    index = Index(database)
    exclusions = [{'x%03d' % i} for i in range(13)]
    batch = index.batch_query(queries, 7, exclusions, block_size=4)
    for query_id, exclude, ranked in zip(queries.ids, exclusions, batch):
        assert ranked == index.query(queries.vector(query_id), 7, exclude)


def test_threads_and_blocks_do_not_change_results(make_set):
    database = make_set(200, 16, seed=3)
    queries = make_set(37, 16, seed=4, prefix='q')
    index = Index(database)
    reference = index.batch_query(queries, 10, threads=1)
    assert index.batch_query(queries, 10, threads=4, block_size=5) == reference
    assert index.batch_query(queries, 10, threads=2, block_size=1) == reference


def test_ties_broken_by_id():
    database = DescriptorSet(['c', 'a', 'b'], [[1.0, 0.0]] * 3)
    ranked = Index(database).query([1.0, 0.0], 3)
    assert ranked.ids == ('a', 'b', 'c')


def test_exclude_all_returns_empty():
    index = Index(DescriptorSet(['a'], [[1.0]]))
    assert len(index.query([1.0], 1, {'a'})) == 0


def test_k_larger_than_database():
    index = Index(DescriptorSet(['a', 'b'], [[0.0], [1.0]]))
    ranked = index.query([0.9], 5)
    assert ranked.ids == ('b', 'a')
    np.testing.assert_allclose(ranked.distances, [0.1, 0.9])


def test_invalid_queries():
    index = Index(DescriptorSet(['a', 'b'], [[0.0, 1.0], [1.0, 0.0]]))
    with pytest.raises(DimensionMismatchError):
        index.query([1.0, 0.0, 0.0], 1)
    with pytest.raises(ValidationError):
        index.query([1.0, 0.0], 0)


def test_build_index_normalizes():
    index = build_index(DescriptorSet(['a', 'b'], [[3.0, 4.0], [0.0, 2.0]]))
    np.testing.assert_allclose(index.database.data, [[0.6, 0.8], [0, 1]])
    assert index.size == 2 and index.dim == 2 and index.ids == ('a', 'b')


def test_ranked_list_helpers():
    ranked = RankedList(['a', 'b', 'c'], [0.0, 0.5, 1.0])
    assert len(ranked) == 3
    assert ranked[1] == ('b', 0.5)
    assert ranked.top(2) == RankedList(['a', 'b'], [0.0, 0.5])
