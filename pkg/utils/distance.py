"""Normalization and distance primitives on neural codes.

Descriptors are compared with the L2 distance after L2 normalization. All
arithmetic is done in float64.
"""

import numpy as np

from utils.errors import DimensionMismatchError, ZeroVectorError

EPS = 1e-12


def l2_normalize(vector):
    """Scale a vector to unit L2 norm.

    Args:
        vector (array-like): Shape (d, ), finite.

    Returns:
        normalized (np.ndarray): float64 array of shape (d, ).

    Raises:
        ZeroVectorError: if the norm is <= EPS.
    """
    vector = np.asarray(vector, dtype=np.float64)
    norm = np.sqrt(np.sum(vector**2))
    if not norm > EPS:
        raise ZeroVectorError()
    return vector / norm


def l2_distance(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatchError(a.shape, b.shape, 'vector shape')
    return float(np.sqrt(np.sum((a - b)**2)))


def normalize_rows(data, ids=None):
    """L2-normalize every row of a (n, d) matrix.

    Args:
        data (np.ndarray): Shape (n, d).
        ids (list, optional): Row ids, used only for error reporting.
    """
    data = np.asarray(data, dtype=np.float64)
    norms = np.sqrt(np.sum(data**2, axis=1))
    bad = np.flatnonzero(~(norms > EPS))
    if bad.size:
        row = int(bad[0])
        raise ZeroVectorError(ids[row] if ids is not None else row)
    return data / norms[:, np.newaxis]


def normalize_set(descriptors):
    """Return a copy of a DescriptorSet with unit-norm rows."""
    return descriptors.with_data(
        normalize_rows(descriptors.data, descriptors.ids))
