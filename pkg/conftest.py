import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from utils.descriptors import DescriptorSet  # noqa: E402
from utils.distance import normalize_rows  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def make_set():
    """Factory for random DescriptorSets with ids 'x000', 'x001', ..."""

    def _make(n, d, seed=0, normalize=True, prefix='x'):
        data = np.random.default_rng(seed).standard_normal((n, d))
        if normalize:
            data = normalize_rows(data)
        return DescriptorSet(['%s%03d' % (prefix, i) for i in range(n)], data)

    return _make
