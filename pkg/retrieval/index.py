"""Exact brute-force nearest neighbour search over neural codes.

Distances are L2. Candidates are selected with a blocked matrix product
(||q||^2 + ||x||^2 - 2 q.x) and the final ranking is computed from distances
recomputed directly as ||q - x||, so results do not depend on block sizes or
on the number of threads. Ties are broken by id (ascending).
"""

import logging

import numpy as np
from joblib import Parallel, delayed

from utils.distance import normalize_set
from utils.errors import DimensionMismatchError, ValidationError

DEFAULT_BLOCK_SIZE = 256
# Relative slack on squared distances when selecting candidates; far above
# the rounding error of the matrix-product distances.
CANDIDATE_SLACK = 1e-8


def matrix_squared_distances(queries, data, data_squared_norms=None):
    """Squared L2 distances between rows of `queries` and rows of `data`,
    computed with one matrix product. For unit rows this is 2 - 2 q.x."""
    if data_squared_norms is None:
        data_squared_norms = np.sum(data**2, axis=1)
    return (np.sum(queries**2, axis=1)[:, np.newaxis] +
            data_squared_norms[np.newaxis, :] - 2 * queries @ data.T)


class RankedList():
    """Result of a query: ids in ascending distance, ties by id."""

    def __init__(self, ids, distances):
        self.ids = tuple(ids)
        self.distances = np.asarray(distances, dtype=np.float64)
        assert len(self.ids) == len(self.distances)

    def __len__(self):
        return len(self.ids)

    def __iter__(self):
        return iter(zip(self.ids, self.distances.tolist()))

    def __getitem__(self, index):
        return self.ids[index], float(self.distances[index])

    def __eq__(self, other):
        return (isinstance(other, RankedList) and self.ids == other.ids
                and np.array_equal(self.distances, other.distances))

    def top(self, k):
        return RankedList(self.ids[:k], self.distances[:k])

    def __repr__(self):
        return 'RankedList(%r)' % list(self)


class Index():
    """Immutable brute-force index over a DescriptorSet."""

    def __init__(self, database):
        self.database = database
        data = database.data
        self._squared_norms = np.sum(data**2, axis=1)
        # Position of every row in the sorted id order, used for tie breaks.
        order = sorted(range(len(database)), key=lambda i: database.ids[i])
        self._id_rank = np.empty(len(database), dtype=np.int64)
        self._id_rank[order] = np.arange(len(database))

    @property
    def size(self):
        return len(self.database)

    @property
    def dim(self):
        return self.database.dim

    @property
    def ids(self):
        return self.database.ids

    def _exclusion_mask(self, exclude):
        mask = np.zeros(self.size, dtype=bool)
        for item_id in exclude or ():
            if item_id in self.database:
                mask[self.database.row_of(item_id)] = True
        return mask

    def _rank(self, vector, approximate, k, excluded):
        """Exact top-k for one query given approximate squared distances."""
        eligible = np.flatnonzero(~excluded)
        if eligible.size == 0:
            return RankedList([], [])
        k = min(k, eligible.size)
        if k < eligible.size:
            approx = approximate[eligible]
            kth = np.partition(approx, k - 1)[k - 1]
            slack = CANDIDATE_SLACK * (1 + np.dot(vector, vector) +
                                       self._squared_norms.max())
            candidates = eligible[approx <= kth + slack]
        else:
            candidates = eligible
        data = self.database.data[candidates]
        distances = np.sqrt(np.sum((data - vector)**2, axis=1))
        order = np.lexsort((self._id_rank[candidates], distances))[:k]
        rows = candidates[order]
        return RankedList([self.database.ids[i] for i in rows],
                          distances[order])

    def _query_block(self, vectors, k, exclusions):
        if k >= self.size:
            approximate = np.zeros((len(vectors), self.size))
        else:
            approximate = matrix_squared_distances(
                vectors, self.database.data, self._squared_norms)
        return [
            self._rank(vector, approx, k, self._exclusion_mask(exclude))
            for vector, approx, exclude in zip(vectors, approximate,
                                               exclusions)
        ]

    def query(self, vector, k, exclude=None):
        """Exact k nearest rows to `vector` among rows not in `exclude`.

        Args:
            vector (array-like): Shape (d, ).
            k (int): >= 1.
            exclude (iterable of str, optional): Ids to leave out.

        Returns:
            ranked (RankedList): At most k entries.
        """
        vector = np.asarray(vector, dtype=np.float64)
        if vector.ndim != 1 or vector.shape[0] != self.dim:
            raise DimensionMismatchError(self.dim, vector.shape)
        if k < 1:
            raise ValidationError('k must be >= 1, got %s' % k)
        return self._query_block(vector[np.newaxis], k, [exclude])[0]

    def batch_query(self, queries, k, exclusions=None, threads=1,
                    block_size=DEFAULT_BLOCK_SIZE):
        """query() for every row of a DescriptorSet.

        Args:
            queries (DescriptorSet): Shape (m, d).
            k (int)
            exclusions (list, optional): Per-query id collections to exclude,
                aligned with queries.ids.
            threads (int): Number of joblib workers.
            block_size (int): Queries per matrix-product block.

        Returns:
            ranked_lists (list of RankedList)
        """
        if queries.dim != self.dim:
            raise DimensionMismatchError(self.dim, queries.dim)
        if k < 1:
            raise ValidationError('k must be >= 1, got %s' % k)
        if exclusions is None:
            exclusions = [None] * len(queries)
        if len(exclusions) != len(queries):
            raise DimensionMismatchError(len(queries), len(exclusions),
                                         'exclusion list count')
        blocks = [(start, min(start + block_size, len(queries)))
                  for start in range(0, len(queries), block_size)]
        logging.debug('Querying %s vectors in %s blocks with %s threads',
                      len(queries), len(blocks), threads)
        results = Parallel(n_jobs=threads, backend='threading')(
            delayed(self._query_block)(queries.data[start:end], k,
                                       exclusions[start:end])
            for start, end in blocks)
        return [ranked for block in results for ranked in block]


def build_index(descriptors, normalize=True):
    """Build an index, optionally L2-normalizing the rows first."""
    if normalize:
        descriptors = normalize_set(descriptors)
    return Index(descriptors)
