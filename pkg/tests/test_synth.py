import numpy as np
import pytest

from compression.pca import apply_pca, fit_pca
from evaluation.protocols import evaluate_holidays
from retrieval.index import build_index
from synth.generate import SynthSpec, generate, generate_nuisance_pairs
from utils.errors import ValidationError


def _holidays_map(descriptors, gt):
    return evaluate_holidays(build_index(descriptors), gt).aggregate


def test_zero_noise_members_are_identical():
    descriptors, gt = generate(SynthSpec(groups=5, size=3, dim=10))
    for group in gt.groups():
        rows = descriptors.subset(gt.group_members(group)).data
        np.testing.assert_array_equal(rows, np.repeat(rows[:1], 3, axis=0))
    np.testing.assert_allclose(np.linalg.norm(descriptors.data, axis=1), 1,
                               atol=1e-12)
    assert descriptors.layer_tag == 'synthetic'


def test_layout():
    descriptors, gt = generate(SynthSpec(groups=3, size=2, dim=4, sigma=0.1))
    assert descriptors.ids == ('g0_0', 'g0_1', 'g1_0', 'g1_1', 'g2_0', 'g2_1')
    assert gt.group_of['g2_1'] == '2'
    assert len(gt) == 6


def test_deterministic():
    spec = SynthSpec(groups=10, size=3, dim=16, sigma=0.2, nuisance_dim=4,
                     nuisance_amp=0.3, seed=11)
    first, _ = generate(spec)
    second, _ = generate(spec)
    np.testing.assert_array_equal(first.data, second.data)
    other, _ = generate(SynthSpec(groups=10, size=3, dim=16, sigma=0.2,
                                  nuisance_dim=4, nuisance_amp=0.3, seed=12))
    assert not np.array_equal(first.data, other.data)


@pytest.mark.parametrize('kwargs', [
    dict(groups=1, size=2, dim=4),
    dict(groups=2, size=1, dim=4),
    dict(groups=2, size=2, dim=4, sigma=-1.0),
    dict(groups=2, size=2, dim=4, nuisance_dim=4),
    dict(groups=2, size=2, dim=4, intrinsic_dim=5),
])
def test_invalid_settings(kwargs):
    with pytest.raises(ValidationError):
        generate(SynthSpec(**kwargs))


def test_intrinsic_dimension():
    descriptors, _ = generate(
        SynthSpec(groups=40, size=3, dim=20, sigma=0.1, intrinsic_dim=5))
    singular = np.linalg.svd(descriptors.data, compute_uv=False)
    assert singular[5] < 1e-10 * singular[0]


def test_nuisance_pairs_smallest_case():
    descriptors, gt = generate(SynthSpec(groups=2, size=2, dim=4))
    pairs = generate_nuisance_pairs(descriptors, gt, seed=1)
    assert pairs.positives == [('g0_0', 'g0_1'), ('g1_0', 'g1_1')]
    assert len(pairs.negatives) == 2


def test_nuisance_pair_counts():
    descriptors, gt = generate(
        SynthSpec(groups=6, size=4, dim=8, nuisance_dim=2, nuisance_amp=0.5))
    pairs = generate_nuisance_pairs(descriptors, gt)
    assert len(pairs.positives) == 6 * 4 * 3 // 2
    assert len(pairs.negatives) == len(pairs.positives)
    assert all(gt.group_of[a] == gt.group_of[b] for a, b in pairs.positives)
    assert all(gt.group_of[a] != gt.group_of[b] for a, b in pairs.negatives)


@pytest.mark.slow
def test_pca_keeps_accuracy_on_low_rank_codes():
    """Codes living in a 32-dimensional subspace of a 128-dimensional space
    lose nothing under PCA to 64 dimensions, and accuracy grows with the
    number of kept components."""
    dims = (8, 16, 32, 64)
    full_maps, reduced_maps = [], {dim: [] for dim in dims}
    for seed in range(5):
        descriptors, gt = generate(
            SynthSpec(groups=200, size=4, dim=128, sigma=0.1,
                      intrinsic_dim=32, seed=seed))
        full_maps.append(_holidays_map(descriptors, gt))
        for dim in dims:
            model = fit_pca(descriptors, dim, seed=seed)
            reduced_maps[dim].append(
                _holidays_map(apply_pca(model, descriptors), gt))

    means = [np.mean(reduced_maps[dim]) for dim in dims]
    assert means[-1] >= 0.98 * np.mean(full_maps)
    assert all(b >= a - 1e-9 for a, b in zip(means, means[1:]))
