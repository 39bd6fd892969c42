"""Synthetic neural-code datasets with planted group structure.

Every group has a centre drawn uniformly on the unit sphere. Members are
normalize(centre + sigma * gaussian + amplitude * nuisance), where the
nuisance gaussian lives on the first `nuisance_dim` coordinate axes. With
`intrinsic_dim` set, centres and isotropic noise are confined to a random
subspace of that dimension.
"""

import dataclasses
import itertools
import logging

import numpy as np

from evaluation.groundtruth import GroupGroundTruth
from pairs.graph import PairSet
from pairs.mining import sample_negatives
from utils.descriptors import DescriptorSet
from utils.distance import normalize_rows
from utils.errors import ValidationError


@dataclasses.dataclass(frozen=True)
class SynthSpec:
    groups: int
    size: int
    dim: int
    sigma: float = 0.0
    nuisance_dim: int = 0
    nuisance_amp: float = 0.0
    intrinsic_dim: int = None
    seed: int = 42

    def validate(self):
        if self.groups < 2:
            raise ValidationError('groups must be >= 2, got %s' % self.groups)
        if self.size < 2:
            raise ValidationError('size must be >= 2, got %s' % self.size)
        if self.dim < 2:
            raise ValidationError('dim must be >= 2, got %s' % self.dim)
        if not self.sigma >= 0:
            raise ValidationError('sigma must be >= 0, got %s' % self.sigma)
        if not 0 <= self.nuisance_dim < self.dim:
            raise ValidationError('nuisance_dim must be in [0, %s), got %s' %
                                  (self.dim, self.nuisance_dim))
        if not self.nuisance_amp >= 0:
            raise ValidationError('nuisance_amp must be >= 0, got %s' %
                                  self.nuisance_amp)
        if (self.intrinsic_dim is not None
                and not 1 <= self.intrinsic_dim <= self.dim):
            raise ValidationError('intrinsic_dim must be in [1, %s], got %s' %
                                  (self.dim, self.intrinsic_dim))

    @property
    def has_nuisance(self):
        return self.nuisance_dim > 0 and self.nuisance_amp > 0


def item_id(group, member):
    return 'g%d_%d' % (group, member)


def generate(spec):
    """
    Args:
        spec (SynthSpec)

    Returns:
        descriptors (DescriptorSet): groups * size unit rows, group-major.
        gt (GroupGroundTruth): Maps every id to its group index (as str).
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    g, s, d = spec.groups, spec.size, spec.dim

    if spec.intrinsic_dim is None:
        basis = None
        latent_dim = d
    else:
        basis, _ = np.linalg.qr(rng.standard_normal((d, spec.intrinsic_dim)))
        latent_dim = spec.intrinsic_dim

    centers = rng.standard_normal((g, latent_dim))
    noise = spec.sigma * rng.standard_normal((g, s, latent_dim))
    nuisance = spec.nuisance_amp * rng.standard_normal(
        (g, s, spec.nuisance_dim))

    latent = (centers / np.linalg.norm(centers, axis=1, keepdims=True)
              )[:, np.newaxis, :] + noise
    data = latent if basis is None else latent @ basis.T
    data[:, :, :spec.nuisance_dim] += nuisance

    ids = [item_id(j, i) for j in range(g) for i in range(s)]
    data = normalize_rows(data.reshape(g * s, d), ids)
    gt = GroupGroundTruth({item_id(j, i): str(j)
                           for j in range(g) for i in range(s)})
    logging.debug('Generated %s groups of %s in %s dimensions', g, s, d)
    return DescriptorSet(ids, data, layer_tag='synthetic'), gt


def generate_nuisance_pairs(descriptors, gt, seed=42):
    """Training pairs for projection learning from a synthetic set.

    Positives are all same-group pairs (groups * size * (size - 1) / 2 for
    equal sizes); negatives are the same number of seeded cross-group pairs.
    """
    gt.check_resolvable(descriptors.ids)
    positives = sorted(
        itertools.chain.from_iterable(
            itertools.combinations(gt.group_members(group), 2)
            for group in gt.groups()))
    negatives = sample_negatives(gt.group_of, len(positives), seed)
    return PairSet(positives, negatives)
