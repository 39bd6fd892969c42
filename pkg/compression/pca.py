"""PCA compression of neural codes.

The model is fitted by a dense eigendecomposition of the sample covariance
(or of the Gram matrix when there are fewer samples than dimensions).
"""

import logging

import numpy as np
import scipy.linalg

from utils.distance import normalize_rows
from utils.errors import (DimensionMismatchError, RankDeficientError,
                          TooFewSamplesError, ValidationError)

DEFAULT_SAMPLE_CAP = 100000
# Relative threshold below which an eigenvalue counts as numerically zero.
RANK_TOLERANCE = 1e-10
WHITEN_FLOOR = 1e-10


class PcaModel():
    def __init__(self, mean, components, eigvals):
        """
        Args:
            mean (array-like): Shape (d, ).
            components (array-like): Shape (D, d); rows are principal
                directions.
            eigvals (array-like): Shape (D, ), non-increasing.
        """
        mean = np.array(mean, dtype=np.float64)
        components = np.array(components, dtype=np.float64)
        eigvals = np.array(eigvals, dtype=np.float64)
        if components.ndim != 2 or mean.ndim != 1 or eigvals.ndim != 1:
            raise ValidationError('Malformed PCA model arrays.')
        num_components, dim = components.shape
        if not 1 <= num_components <= dim:
            raise ValidationError(
                'PCA model needs 1 <= D <= d, got D=%s, d=%s' %
                (num_components, dim))
        if mean.shape[0] != dim:
            raise DimensionMismatchError(dim, mean.shape[0], 'mean length')
        if eigvals.shape[0] != num_components:
            raise DimensionMismatchError(num_components, eigvals.shape[0],
                                         'eigenvalue count')
        for array in (mean, components, eigvals):
            if not np.all(np.isfinite(array)):
                raise ValidationError('Non-finite value in PCA model.')
        if np.any(np.diff(eigvals) > 0):
            raise ValidationError('PCA eigenvalues must be non-increasing.')
        if np.any(eigvals < -RANK_TOLERANCE):
            raise ValidationError('PCA eigenvalues must be non-negative.')
        eigvals = np.maximum(eigvals, 0)

        for array in (mean, components, eigvals):
            array.flags.writeable = False
        self.mean = mean
        self.components = components
        self.eigvals = eigvals

    @property
    def d_in(self):
        return self.components.shape[1]

    @property
    def d_out(self):
        return self.components.shape[0]

    def projector(self):
        """(d, d) orthogonal projector onto the retained subspace."""
        return self.components.T @ self.components


def fix_signs(components):
    """Make the largest-magnitude entry of every row positive."""
    components = components.copy()
    largest = np.argmax(np.abs(components), axis=1)
    flip = components[np.arange(components.shape[0]), largest] < 0
    components[flip] *= -1
    return components


def sample_rows(num_rows, sample_cap, seed):
    """Sorted indices of at most `sample_cap` rows, drawn without
    replacement."""
    if num_rows <= sample_cap:
        return np.arange(num_rows)
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(num_rows, size=sample_cap, replace=False))


def _eigh_descending(matrix):
    eigvals, eigvecs = scipy.linalg.eigh(matrix)
    return eigvals[::-1], eigvecs[:, ::-1]


def fit_pca(descriptors, dim, seed=42, sample_cap=DEFAULT_SAMPLE_CAP,
            strict_rank=False):
    """Fit a D-dimensional PCA model.

    Args:
        descriptors (DescriptorSet): Training codes.
        dim (int): Number of components D.
        seed (int): Seed of the row sampler used when n > sample_cap.
        sample_cap (int): Maximum number of training rows.
        strict_rank (bool): If True, requesting more components than the
            numeric rank of the data raises RankDeficientError. Otherwise a
            warning is logged and null-space directions pad the model.

    Returns:
        model (PcaModel)
    """
    if dim < 1:
        raise ValidationError('PCA dimension must be positive, got %s' % dim)
    if sample_cap < 2:
        raise ValidationError('sample_cap must be >= 2, got %s' % sample_cap)
    if dim > descriptors.dim:
        raise DimensionMismatchError('<= %s' % descriptors.dim, dim,
                                     'PCA output dimension')
    if len(descriptors) < 2:
        raise TooFewSamplesError('PCA needs at least 2 samples, got %s' %
                                 len(descriptors))

    rows = sample_rows(len(descriptors), sample_cap, seed)
    data = descriptors.data[rows]
    num_samples, input_dim = data.shape
    if len(rows) < len(descriptors):
        logging.info('Fitting PCA on %s of %s rows', num_samples,
                     len(descriptors))
    if dim > num_samples - 1:
        raise RankDeficientError(
            'Cannot fit %s components from %s samples (at most n-1 = %s).' %
            (dim, num_samples, num_samples - 1))

    mean = data.mean(axis=0)
    centered = data - mean
    eigvals = eigvecs = None
    if num_samples < input_dim:
        gram = (centered @ centered.T) / (num_samples - 1)
        gram_vals, gram_vecs = _eigh_descending(gram)
        tolerance = RANK_TOLERANCE * max(gram_vals[0], 1.0)
        if gram_vals[dim - 1] > tolerance:
            eigvals = gram_vals[:dim]
            eigvecs = (centered.T @ gram_vecs[:, :dim]) / np.sqrt(
                eigvals * (num_samples - 1))
            all_vals = gram_vals
    if eigvals is None:
        covariance = (centered.T @ centered) / (num_samples - 1)
        all_vals, all_vecs = _eigh_descending(covariance)
        eigvals = all_vals[:dim]
        eigvecs = all_vecs[:, :dim]

    tolerance = RANK_TOLERANCE * max(all_vals[0], 1.0)
    rank = int(np.sum(all_vals > tolerance))
    if dim > rank:
        message = ('Requested %s components but data has numeric rank %s.' %
                   (dim, rank))
        if strict_rank:
            raise RankDeficientError(message)
        logging.warning('%s Padding with null-space directions.', message)

    eigvals = np.maximum(eigvals, 0)
    components = fix_signs(eigvecs.T)
    return PcaModel(mean, components, eigvals)


def apply_pca(model, descriptors, renormalize=True, whiten=False):
    """Project descriptors onto the model's principal directions.

    Args:
        model (PcaModel)
        descriptors (DescriptorSet): Shape (n, model.d_in).
        renormalize (bool): L2-normalize each projected row.
        whiten (bool): Divide each coordinate by sqrt(eigval).

    Returns:
        projected (DescriptorSet): Shape (n, model.d_out), same ids.
    """
    if descriptors.dim != model.d_in:
        raise DimensionMismatchError(model.d_in, descriptors.dim)
    projected = (descriptors.data - model.mean) @ model.components.T
    if whiten:
        projected = projected / np.sqrt(
            np.maximum(model.eigvals, WHITEN_FLOOR))
    if renormalize:
        projected = normalize_rows(projected, descriptors.ids)
    return descriptors.with_data(projected)


def reconstruction_error(model, descriptors):
    """Residual variance left after projecting onto the model subspace.

    Equals the sum of the discarded eigenvalues when evaluated on the
    training set: (1 / (n - 1)) * sum_i ||r_i||^2.
    """
    if descriptors.dim != model.d_in:
        raise DimensionMismatchError(model.d_in, descriptors.dim)
    centered = descriptors.data - model.mean
    residual = centered - (centered @ model.components.T) @ model.components
    return float(np.sum(residual**2) / (len(descriptors) - 1))


def projected_variance(model, descriptors):
    """Sample variance of the training data along each retained axis."""
    projected = apply_pca(model, descriptors, renormalize=False).data
    return np.var(projected, axis=0, ddof=1)


def fit_pca_set(descriptors, dim, seed=42, sample_cap=DEFAULT_SAMPLE_CAP,
                exclude_ids=None, strict_rank=False):
    """fit_pca on `descriptors` minus `exclude_ids` (e.g. query images)."""
    if exclude_ids:
        kept = descriptors.without(exclude_ids)
        logging.info('Excluded %s ids from PCA training',
                     len(descriptors) - len(kept))
        descriptors = kept
    return fit_pca(descriptors, dim, seed=seed, sample_cap=sample_cap,
                   strict_rank=strict_rank)


