"""Mine training pairs from per-class match graphs.

Positive pairs are photographs that share at least one neighbour in the match
graph but are not matched directly, i.e. views of the same object that are
hard for the matching pipeline. Negatives are sampled across classes.
"""

import collections
import itertools
import logging

import numpy as np

from pairs.graph import PairSet, canonical_pair
from utils.errors import InsufficientDiversityError, ValidationError

DEFAULT_BUDGET = 100000


def mine_candidate_pairs(graph):
    """All non-adjacent pairs with a common neighbour, sorted.

    Returns:
        pairs (list of (str, str)): Canonically ordered (a < b), sorted.
    """
    candidates = set()
    for label, nodes in sorted(graph.classes().items()):
        num_before = len(candidates)
        for node in nodes:
            neighbors = graph.neighbors(node)
            for neighbor in neighbors:
                for other in graph.neighbors(neighbor):
                    if other > node and other not in neighbors:
                        candidates.add((node, other))
        logging.debug('Class %r: %s nodes, %s candidate pairs', label,
                      len(nodes), len(candidates) - num_before)
    return sorted(candidates)


def greedy_unique_subset(pairs, budget=DEFAULT_BUDGET):
    """Keep pairs in order so that every id is used at most once.

    Args:
        pairs (list of (str, str)): Canonically ordered pairs.
        budget (int): Maximum number of pairs to keep.
    """
    used = set()
    output = []
    for a, b in pairs:
        if len(output) >= budget:
            break
        if a in used or b in used:
            continue
        used.update((a, b))
        output.append((a, b))
    return output


def count_cross_class_pairs(class_of):
    sizes = np.array(list(collections.Counter(class_of.values()).values()),
                     dtype=np.int64)
    total = int(sizes.sum())
    return int((total * total - np.sum(sizes * sizes)) // 2)


def sample_negatives(class_of, count, seed=42):
    """Sample `count` distinct pairs of images from different classes.

    Args:
        class_of (dict): Maps id to class label; needs >= 2 classes.
        count (int)
        seed (int)

    Returns:
        pairs (list of (str, str)): Canonically ordered, sorted.
    """
    if count < 0:
        raise ValidationError('count must be non-negative, got %s' % count)
    ids = sorted(class_of)
    labels = [class_of[x] for x in ids]
    num_classes = len(set(labels))
    if num_classes < 2:
        raise InsufficientDiversityError(
            'Negative sampling needs at least 2 classes, got %s' % num_classes)
    available = count_cross_class_pairs(class_of)
    if count > available:
        raise InsufficientDiversityError(
            'Requested %s negatives but only %s cross-class pairs exist' %
            (count, available))

    rng = np.random.default_rng(seed)
    if 4 * count >= available:
        # Dense regime: enumerate every cross-class pair and choose.
        everything = [(ids[i], ids[j])
                      for i, j in itertools.combinations(range(len(ids)), 2)
                      if labels[i] != labels[j]]
        chosen = rng.choice(len(everything), size=count, replace=False)
        return sorted(everything[i] for i in chosen)

    chosen = set()
    while len(chosen) < count:
        i, j = rng.integers(0, len(ids), size=2)
        if labels[i] == labels[j]:
            continue
        chosen.add(canonical_pair(ids[i], ids[j]))
    return sorted(chosen)


def mine_pairs(graph, budget=DEFAULT_BUDGET, num_negatives=None, seed=42):
    """Full mining pipeline: candidates, greedy subset, sampled negatives.

    Args:
        num_negatives (int, optional): Defaults to the number of positives.
            Negatives are only sampled if the graph has class labels.
    """
    candidates = mine_candidate_pairs(graph)
    positives = greedy_unique_subset(candidates, budget)
    logging.info('Mined %s candidate pairs, kept %s unique pairs',
                 len(candidates), len(positives))
    negatives = []
    if graph.class_of is not None:
        if num_negatives is None:
            num_negatives = len(positives)
        negatives = sample_negatives(graph.class_of, num_negatives, seed)
    return PairSet(positives, negatives)
