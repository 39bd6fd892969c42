"""Discriminative dimensionality reduction.

Learns a low-rank linear projection W (D x d_in) so that squared distances
between codes of matching images fall below `tau_pos`, and those between
non-matching images rise above `tau_neg`:

    L(W) = sum_pos max(0, ||W(x_i - x_j)||^2 - tau_pos)
         + sum_neg max(0, tau_neg - ||W(x_i - x_j)||^2)

L is minimized by seeded mini-batch gradient descent starting from the top-D
PCA directions. For large D, the codes are first PCA-compressed (to 1024
dimensions by default) and W is learned on the compressed codes.
"""

import dataclasses
import logging

import numpy as np
from tqdm import tqdm

from compression.pca import (DEFAULT_SAMPLE_CAP, PcaModel, apply_pca,
                             fit_pca)
from utils.distance import normalize_rows
from utils.errors import (DimensionMismatchError, DivergedLossError,
                          EmptyPairsError, ValidationError)

# Chunk size used when evaluating the loss over the full training set.
LOSS_CHUNK = 4096
NORM_TOLERANCE = 1e-6


@dataclasses.dataclass(frozen=True)
class TrainConfig:
    dim: int
    tau_pos: float = 0.8
    tau_neg: float = 1.4
    eta0: float = 0.1
    decay: float = 0.1
    epochs: int = 30
    batch_size: int = 256
    seed: int = 42
    max_backoffs: int = 10
    # Two-stage rule: for dim >= two_stage_min_dim, W is learned on codes
    # PCA-compressed to pre_pca_dim.
    two_stage_min_dim: int = 64
    pre_pca_dim: int = 1024
    sample_cap: int = DEFAULT_SAMPLE_CAP

    def validate(self):
        for name in ('dim', 'batch_size', 'pre_pca_dim', 'sample_cap'):
            if getattr(self, name) < 1:
                raise ValidationError('%s must be positive' % name)
        for name in ('tau_pos', 'tau_neg', 'eta0'):
            if not getattr(self, name) > 0:
                raise ValidationError('%s must be positive' % name)
        if self.decay < 0 or self.epochs < 0 or self.max_backoffs < 0:
            raise ValidationError(
                'decay, epochs and max_backoffs must be non-negative')
        if not self.tau_pos < self.tau_neg:
            raise ValidationError('tau_pos (%s) must be < tau_neg (%s)' %
                                  (self.tau_pos, self.tau_neg))

    def uses_pre_pca(self):
        return self.dim >= self.two_stage_min_dim

    def hyperparams(self):
        return dataclasses.asdict(self)


class ProjectionModel():
    def __init__(self, weights, pre_pca=None, hyperparams=None):
        """
        Args:
            weights (array-like): W, shape (D, d_in).
            pre_pca (PcaModel, optional): Applied (without renormalization)
                before W.
            hyperparams (dict, optional): Training provenance.
        """
        weights = np.array(weights, dtype=np.float64)
        if weights.ndim != 2 or min(weights.shape) < 1:
            raise ValidationError('W must be a non-empty 2-d matrix.')
        if not np.all(np.isfinite(weights)):
            raise ValidationError('W contains non-finite values.')
        if weights.shape[0] > weights.shape[1]:
            raise ValidationError('W must have D <= d_in, got shape %s' %
                                  (weights.shape, ))
        if pre_pca is not None:
            assert isinstance(pre_pca, PcaModel)
            if pre_pca.d_out != weights.shape[1]:
                raise DimensionMismatchError(pre_pca.d_out, weights.shape[1],
                                             'pre-PCA output dimension')
        weights.flags.writeable = False
        self.weights = weights
        self.pre_pca = pre_pca
        self.hyperparams = dict(hyperparams or {})

    @property
    def d_out(self):
        return self.weights.shape[0]

    @property
    def d_in(self):
        """Dimension of the codes the model accepts."""
        if self.pre_pca is not None:
            return self.pre_pca.d_in
        return self.weights.shape[1]


def _hinge_loss_and_gradient(weights, deltas, is_positive, tau_pos, tau_neg):
    """Loss and gradient of the pairwise hinge objective.

    Args:
        weights (np.ndarray): Shape (D, d).
        deltas (np.ndarray): Shape (B, d), x_i - x_j per pair.
        is_positive (np.ndarray): Shape (B, ), bool.

    Returns:
        loss (float), gradient (np.ndarray of shape (D, d))
    """
    projected = deltas @ weights.T
    squared = np.sum(projected**2, axis=1)
    # At a hinge boundary the inactive branch (zero gradient) is used.
    positive_active = is_positive & (squared > tau_pos)
    negative_active = ~is_positive & (squared < tau_neg)
    loss = (np.sum(squared[positive_active] - tau_pos) +
            np.sum(tau_neg - squared[negative_active]))
    coefficients = (positive_active.astype(np.float64) -
                    negative_active.astype(np.float64))
    gradient = 2 * (projected * coefficients[:, np.newaxis]).T @ deltas
    return float(loss), gradient


def _pair_rows(descriptors, pairs):
    """Row indices and labels for every pair, positives first."""
    all_pairs = pairs.positives + pairs.negatives
    if not all_pairs:
        raise EmptyPairsError('No training pairs given.')
    rows_a = descriptors.rows(a for a, _ in all_pairs)
    rows_b = descriptors.rows(b for _, b in all_pairs)
    is_positive = np.zeros(len(all_pairs), dtype=bool)
    is_positive[:len(pairs.positives)] = True
    return rows_a, rows_b, is_positive


def loss_and_gradient(weights, descriptors, batch, cfg):
    """Objective restricted to a batch of pairs.

    Args:
        weights (np.ndarray): W, shape (D, d).
        descriptors (DescriptorSet): Codes the pair ids refer to, shape
            (n, d).
        batch (PairSet): Non-empty.
        cfg (TrainConfig): Supplies the margins.

    Returns:
        loss (float), gradient (np.ndarray of shape (D, d))
    """
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape[1] != descriptors.dim:
        raise DimensionMismatchError(descriptors.dim, weights.shape[1])
    rows_a, rows_b, is_positive = _pair_rows(descriptors, batch)
    deltas = descriptors.data[rows_a] - descriptors.data[rows_b]
    return _hinge_loss_and_gradient(weights, deltas, is_positive,
                                    cfg.tau_pos, cfg.tau_neg)


def _total_loss(weights, data, rows_a, rows_b, is_positive, cfg):
    loss = 0.0
    for start in range(0, len(rows_a), LOSS_CHUNK):
        chunk = slice(start, start + LOSS_CHUNK)
        deltas = data[rows_a[chunk]] - data[rows_b[chunk]]
        projected = deltas @ weights.T
        squared = np.sum(projected**2, axis=1)
        positive = is_positive[chunk]
        loss += np.sum(np.maximum(squared[positive] - cfg.tau_pos, 0))
        loss += np.sum(np.maximum(cfg.tau_neg - squared[~positive], 0))
    return float(loss)


def _run_epoch(weights, data, rows_a, rows_b, is_positive, order, step, cfg):
    weights = weights.copy()
    for start in range(0, len(order), cfg.batch_size):
        batch = order[start:start + cfg.batch_size]
        deltas = data[rows_a[batch]] - data[rows_b[batch]]
        _, gradient = _hinge_loss_and_gradient(
            weights, deltas, is_positive[batch], cfg.tau_pos, cfg.tau_neg)
        weights -= (step / len(batch)) * gradient
    return weights


def check_normalized(descriptors):
    norms = np.sqrt(np.sum(descriptors.data**2, axis=1))
    bad = np.flatnonzero(np.abs(norms - 1) > NORM_TOLERANCE)
    if bad.size:
        raise ValidationError(
            'Projection learning expects L2-normalized codes; row %s has '
            'norm %s' % (descriptors.ids[bad[0]], norms[bad[0]]))


def fit_projection(descriptors, pairs, cfg, verbose=False):
    """Learn a discriminative projection from matching / non-matching pairs.

    Args:
        descriptors (DescriptorSet): L2-normalized training codes.
        pairs (PairSet): Training pairs; every id must be in `descriptors`.
        cfg (TrainConfig)
        verbose (bool): Show a progress bar over epochs.

    Returns:
        model (ProjectionModel)
    """
    cfg.validate()
    check_normalized(descriptors)
    rows_a, rows_b, is_positive = _pair_rows(descriptors, pairs)

    pre_pca = None
    training = descriptors
    if cfg.uses_pre_pca():
        pre_dim = min(cfg.pre_pca_dim, descriptors.dim, len(descriptors) - 1)
        logging.info('Two-stage projection: PCA %s -> %s, then W -> %s',
                     descriptors.dim, pre_dim, cfg.dim)
        pre_pca = fit_pca(descriptors, pre_dim, seed=cfg.seed,
                          sample_cap=cfg.sample_cap)
        training = apply_pca(pre_pca, descriptors, renormalize=False)
    if cfg.dim > training.dim:
        raise DimensionMismatchError('<= %s' % training.dim, cfg.dim,
                                     'projection output dimension')

    weights = fit_pca(training, cfg.dim, seed=cfg.seed,
                      sample_cap=cfg.sample_cap).components.copy()
    data = training.data

    loss = _total_loss(weights, data, rows_a, rows_b, is_positive, cfg)
    if not np.isfinite(loss):
        raise DivergedLossError('Initial loss is not finite.')
    logging.info('Initial loss: %.6g over %s pairs (%s positive)', loss,
                 len(rows_a), int(is_positive.sum()))

    rng = np.random.default_rng(cfg.seed)
    step_scale = 1.0
    epochs_run = 0
    for epoch in tqdm(range(cfg.epochs), disable=not verbose):
        step = cfg.eta0 / (1 + cfg.decay * epoch)
        order = rng.permutation(len(rows_a))
        backoffs = 0
        while True:
            new_weights = _run_epoch(weights, data, rows_a, rows_b,
                                     is_positive, order, step * step_scale,
                                     cfg)
            new_loss = _total_loss(new_weights, data, rows_a, rows_b,
                                   is_positive, cfg)
            if np.isfinite(new_loss) and new_loss <= loss:
                break
            if backoffs == cfg.max_backoffs:
                break
            step_scale /= 2
            backoffs += 1
            logging.warning('Epoch %s: loss increased to %.6g, halving step '
                            '(scale %.3g)', epoch, new_loss, step_scale)
        if not np.isfinite(new_loss):
            raise DivergedLossError(
                'Loss is not finite after %s step halvings (epoch %s).' %
                (backoffs, epoch))
        if new_loss > loss:
            logging.warning('Epoch %s: no decrease after %s halvings; '
                            'stopping early.', epoch, backoffs)
            break
        weights, loss = new_weights, new_loss
        epochs_run += 1
        logging.debug('Epoch %s: loss %.6g', epoch, loss)

    logging.info('Final loss: %.6g after %s epochs', loss, epochs_run)
    hyperparams = cfg.hyperparams()
    hyperparams.update({'final_loss': loss, 'epochs_run': epochs_run})
    return ProjectionModel(weights, pre_pca=pre_pca, hyperparams=hyperparams)


def apply_projection(model, descriptors, renormalize=True):
    """Map codes through the (optional) pre-PCA stage and W.

    Returns:
        projected (DescriptorSet): Shape (n, model.d_out), same ids.
    """
    if descriptors.dim != model.d_in:
        raise DimensionMismatchError(model.d_in, descriptors.dim)
    data = descriptors.data
    if model.pre_pca is not None:
        data = apply_pca(model.pre_pca, descriptors, renormalize=False).data
    projected = data @ model.weights.T
    if renormalize:
        projected = normalize_rows(projected, descriptors.ids)
    return descriptors.with_data(projected)
