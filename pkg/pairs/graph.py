"""Match graphs and training pair sets."""

import collections

from utils.errors import SelfLoopError, ValidationError


def canonical_pair(a, b):
    return (a, b) if a <= b else (b, a)


class MatchGraph():
    """Undirected graph of verified image matches, partitioned by class.

    Edges are only allowed between images of the same class (landmark).
    """

    def __init__(self, edges=(), class_of=None):
        """
        Args:
            edges (iterable of (str, str)): Undirected edges.
            class_of (dict, optional): Maps id to class label. If None, every
                node is assigned to the same class ''.
        """
        self.adjacency = collections.defaultdict(set)
        self.class_of = dict(class_of) if class_of is not None else None
        for a, b in edges:
            self.add_edge(a, b)

    def add_edge(self, a, b):
        if a == b:
            raise SelfLoopError('<graph>', '-', a)
        if self.class_of is not None:
            for node in (a, b):
                if node not in self.class_of:
                    raise ValidationError('Graph node %s has no class' % node)
            if self.class_of[a] != self.class_of[b]:
                raise ValidationError(
                    'Edge %s-%s crosses classes (%s, %s)' %
                    (a, b, self.class_of[a], self.class_of[b]))
        self.adjacency[a].add(b)
        self.adjacency[b].add(a)

    def neighbors(self, node):
        return self.adjacency.get(node, frozenset())

    def nodes(self):
        return sorted(self.adjacency)

    def edges(self):
        return sorted(
            set(canonical_pair(a, b) for a in self.adjacency
                for b in self.adjacency[a]))

    def node_class(self, node):
        if self.class_of is None:
            return ''
        return self.class_of[node]

    def classes(self):
        """Map class label to the sorted list of graph nodes in that class."""
        by_class = collections.defaultdict(list)
        for node in self.nodes():
            by_class[self.node_class(node)].append(node)
        return dict(by_class)

    def __len__(self):
        return len(self.adjacency)


class PairSet():
    """Positive (same object) and negative (different object) image pairs.

    Pairs are stored in canonical (min, max) order.
    """

    def __init__(self, positives=(), negatives=()):
        self.positives = [canonical_pair(a, b) for a, b in positives]
        self.negatives = [canonical_pair(a, b) for a, b in negatives]
        for a, b in self.positives + self.negatives:
            if a == b:
                raise ValidationError('Pair (%s, %s) is a self pair' % (a, b))
        overlap = set(self.positives) & set(self.negatives)
        if overlap:
            raise ValidationError('Pair %s is both positive and negative' %
                                  (min(overlap), ))

    def ids(self):
        return set(x for pair in self.positives + self.negatives for x in pair)

    def __len__(self):
        return len(self.positives) + len(self.negatives)
