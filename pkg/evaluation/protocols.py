"""Benchmark protocols: Oxford Buildings (and 105K), INRIA Holidays, UKB.

Oxford: each hold-out query ranks the whole database; AP is computed with
    "good" (and by default "ok") images as positives and "junk" images
    removed from the ranking.
Holidays: one image per group is the query; it is left out of its own
    ranking and the other group members are the positives.
UKB: every image queries the database including itself; the score is the
    number of same-object images in the top 4 (between 1 and 4).
"""

import logging

from evaluation.metrics import AP_VARIANTS, average_precision, count_same_group
from evaluation.report import EvalReport
from retrieval.index import Index
from utils.errors import (MissingGtError, NoPositivesError,
                          SingletonGroupError, UnresolvableIdError,
                          ValidationError)

OK_POLICIES = ('positive', 'junk')
QUERY_RULES = ('auto', 'first')
UKB_TOP_K = 4
UKB_GROUP_SIZE = 4


def _check_ap_variant(ap_variant):
    if ap_variant not in AP_VARIANTS:
        raise ValidationError('ap_variant must be one of %s, got %s' %
                              (AP_VARIANTS, ap_variant))


def oxford_relevance(relevance, ok_policy):
    """(positives, junk) for one query under an "ok" policy."""
    if ok_policy == 'positive':
        return relevance.good | relevance.ok, relevance.junk
    elif ok_policy == 'junk':
        return relevance.good, relevance.junk | relevance.ok
    raise ValidationError('ok_policy must be one of %s, got %s' %
                          (OK_POLICIES, ok_policy))


def evaluate_oxford(index, queries, gt, ok_policy='positive',
                    ap_variant='rectangular', distractors=None, threads=1):
    """Oxford Buildings mAP.

    Args:
        index (Index): Database index.
        queries (DescriptorSet): Query codes, preprocessed like the database.
        gt (RankedGroundTruth): Relevance per query.
        ok_policy (str): 'positive' (default) counts "ok" images as
            positives, 'junk' removes them from the ranking.
        ap_variant (str): 'rectangular' or 'trapezoidal'.
        distractors (DescriptorSet, optional): Extra database images, e.g.
            the 100K Flickr distractors of Oxford 105K.
        threads (int)

    Returns:
        report (EvalReport)
    """
    _check_ap_variant(ap_variant)
    if distractors is not None:
        index = Index(index.database.concatenate(distractors))
        logging.info('Added %s distractors; database size %s',
                     len(distractors), index.size)

    relevances = []
    for query_id in queries.ids:
        if query_id not in gt:
            raise MissingGtError(query_id)
        positives, junk = oxford_relevance(gt[query_id], ok_policy)
        if not positives:
            raise NoPositivesError(query_id)
        for item_id in sorted(positives):
            if item_id not in index.database:
                raise UnresolvableIdError(item_id, 'database')
        relevances.append((positives, junk))

    ranked_lists = index.batch_query(
        queries, index.size, exclusions=[junk for _, junk in relevances],
        threads=threads)

    per_query = []
    num_junk_skipped = 0
    for query_id, ranked, (positives, junk) in zip(queries.ids, ranked_lists,
                                                   relevances):
        num_junk_skipped += sum(1 for x in junk if x in index.database)
        per_query.append((query_id,
                          average_precision(ranked, positives, junk,
                                            ap_variant, query_id)))
    return EvalReport('oxford', per_query, num_junk_skipped, {
        'ok_policy': ok_policy,
        'ap_variant': ap_variant,
        'database_size': index.size
    })


def holidays_queries(gt, query_rule='auto'):
    """Designated query id of every group, in group order."""
    if query_rule not in QUERY_RULES:
        raise ValidationError('query_rule must be one of %s, got %s' %
                              (QUERY_RULES, query_rule))
    queries = []
    for group in gt.groups():
        if len(gt.group_members(group)) < 2:
            raise SingletonGroupError(group)
        if query_rule == 'first':
            queries.append(gt.group_members(group)[0])
        else:
            queries.append(gt.query_of(group))
    return queries


def evaluate_holidays(index, gt, query_rule='auto', ap_variant='rectangular',
                      threads=1):
    """INRIA Holidays mAP with the query left out of its own ranking.

    Args:
        index (Index): Index over every image referenced by `gt`.
        gt (GroupGroundTruth)
        query_rule (str): 'auto' uses queries marked in the ground truth
            and falls back to the first member (by id) of each group;
            'first' always uses the first member.
    """
    _check_ap_variant(ap_variant)
    gt.check_resolvable(index.ids)
    query_ids = holidays_queries(gt, query_rule)
    queries = index.database.subset(query_ids)
    ranked_lists = index.batch_query(
        queries, index.size, exclusions=[{x} for x in query_ids],
        threads=threads)

    per_query = []
    for query_id, ranked in zip(query_ids, ranked_lists):
        positives = set(gt.same_group(query_id)) - {query_id}
        per_query.append((query_id,
                          average_precision(ranked, positives, (), ap_variant,
                                            query_id)))
    return EvalReport('holidays', per_query, 0, {
        'query_rule': query_rule,
        'ap_variant': ap_variant,
        'database_size': index.size
    })


def evaluate_ukb(index, gt, threads=1):
    """UKB score: mean number of same-object images in the top 4.

    The query itself is part of the database and counts as a result, so a
    perfect score is 4 for groups of 4 and the floor is 1.
    """
    gt.check_resolvable(index.ids)
    odd_groups = [g for g in gt.groups()
                  if len(gt.group_members(g)) != UKB_GROUP_SIZE]
    if odd_groups:
        logging.warning('%s of %s groups do not have %s members (e.g. %s); '
                        'continuing.', len(odd_groups), len(gt.groups()),
                        UKB_GROUP_SIZE, odd_groups[0])

    query_ids = sorted(gt.group_of)
    queries = index.database.subset(query_ids)
    ranked_lists = index.batch_query(queries, UKB_TOP_K, threads=threads)
    per_query = [
        (query_id, float(count_same_group(ranked, gt.same_group(query_id),
                                          UKB_TOP_K)))
        for query_id, ranked in zip(query_ids, ranked_lists)
    ]
    return EvalReport('ukb', per_query, 0, {'database_size': index.size})
