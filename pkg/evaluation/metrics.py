"""Average precision of a ranked list.

Two variants are provided:
    rectangular: mean over positives of the precision at the rank where the
        positive is retrieved (unretrieved positives contribute 0).
    trapezoidal: the interpolation of the Oxford Buildings `compute_ap`
        code, which averages precision between consecutive recall steps.

Junk ids are removed from the ranked list before scoring in both variants.
"""

from utils.errors import NoPositivesError, OverlapError

AP_VARIANTS = ('rectangular', 'trapezoidal')


def _filtered_hits(ranked_ids, positives, junk):
    """Boolean hit flags of the ranked list with junk removed."""
    return [x in positives for x in ranked_ids if x not in junk]


def average_precision(ranked, positives, junk=frozenset(),
                      variant='rectangular', query_id=None):
    """
    Args:
        ranked (RankedList or iterable of ids): Ranked ids, best first.
        positives (set): Non-empty set of relevant ids.
        junk (set): Ids ignored when scoring.
        variant (str): 'rectangular' or 'trapezoidal'.
        query_id (str, optional): Used for error messages.

    Returns:
        ap (float): In [0, 1].
    """
    positives = frozenset(positives)
    junk = frozenset(junk)
    if not positives:
        raise NoPositivesError(query_id)
    if positives & junk:
        raise OverlapError(query_id, min(positives & junk))
    ranked_ids = getattr(ranked, 'ids', ranked)
    hits = _filtered_hits(ranked_ids, positives, junk)

    if variant == 'rectangular':
        total = 0.0
        num_found = 0
        for rank, hit in enumerate(hits, 1):
            if hit:
                num_found += 1
                total += num_found / rank
        return total / len(positives)
    elif variant == 'trapezoidal':
        ap = 0.0
        old_recall = 0.0
        old_precision = 1.0
        num_found = 0
        for rank, hit in enumerate(hits, 1):
            if hit:
                num_found += 1
            recall = num_found / len(positives)
            precision = num_found / rank
            ap += (recall - old_recall) * ((old_precision + precision) / 2)
            old_recall = recall
            old_precision = precision
        return ap
    else:
        raise ValueError('Unknown AP variant: %s' % variant)


def count_same_group(ranked, group, k=4):
    """Number of ids of `group` among the top-k of a ranked list."""
    ranked_ids = getattr(ranked, 'ids', ranked)
    group = frozenset(group)
    return sum(1 for x in list(ranked_ids)[:k] if x in group)
