"""Ground truth for the retrieval benchmarks.

Two forms are supported:
    ranked: per query, disjoint good / ok / junk id sets (Oxford Buildings).
    group: each item belongs to a group of images of the same scene or
        object (Holidays, UKB).
"""

import collections

from utils.errors import OverlapError, UnresolvableIdError, ValidationError

QueryRelevance = collections.namedtuple('QueryRelevance',
                                        ['good', 'ok', 'junk'])


class RankedGroundTruth():
    form = 'ranked'

    def __init__(self, queries):
        """
        Args:
            queries (dict): Maps query id to a QueryRelevance (or a dict with
                keys 'good', 'ok', 'junk') of id collections.
        """
        self.queries = {}
        for query_id, relevance in queries.items():
            if isinstance(relevance, dict):
                relevance = QueryRelevance(
                    relevance.get('good', ()), relevance.get('ok', ()),
                    relevance.get('junk', ()))
            relevance = QueryRelevance(*(frozenset(x) for x in relevance))
            for first, second in ((relevance.good, relevance.junk),
                                  (relevance.ok, relevance.junk),
                                  (relevance.good, relevance.ok)):
                common = first & second
                if common:
                    raise OverlapError(query_id, min(common))
            self.queries[query_id] = relevance

    def __contains__(self, query_id):
        return query_id in self.queries

    def __getitem__(self, query_id):
        return self.queries[query_id]

    def query_ids(self):
        return sorted(self.queries)

    def referenced_ids(self):
        return set(x for r in self.queries.values()
                   for x in r.good | r.ok | r.junk)

    def check_resolvable(self, database_ids):
        database_ids = set(database_ids)
        for item_id in sorted(self.referenced_ids()):
            if item_id not in database_ids:
                raise UnresolvableIdError(item_id, 'database')


class GroupGroundTruth():
    form = 'group'

    def __init__(self, group_of, queries=None):
        """
        Args:
            group_of (dict): Maps item id to group id.
            queries (iterable, optional): Ids explicitly designated as the
                query of their group (at most one per group).
        """
        self.group_of = dict(group_of)
        self.members = collections.defaultdict(list)
        for item_id in sorted(self.group_of):
            self.members[self.group_of[item_id]].append(item_id)
        self.members = dict(self.members)

        self.designated = {}
        for query_id in (queries or ()):
            if query_id not in self.group_of:
                raise UnresolvableIdError(query_id, 'ground truth groups')
            group = self.group_of[query_id]
            if group in self.designated:
                raise ValidationError('Group %s has more than one query' %
                                      group)
            self.designated[group] = query_id

    def groups(self):
        return sorted(self.members)

    def group_members(self, group):
        return self.members[group]

    def query_of(self, group):
        """Designated query of a group; defaults to its first member by id."""
        if group in self.designated:
            return self.designated[group]
        return self.members[group][0]

    def same_group(self, item_id):
        return self.members[self.group_of[item_id]]

    def __len__(self):
        return len(self.group_of)

    def check_resolvable(self, database_ids):
        database_ids = set(database_ids)
        for item_id in sorted(self.group_of):
            if item_id not in database_ids:
                raise UnresolvableIdError(item_id, 'database')
