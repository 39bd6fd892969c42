"""Typed errors raised by the retrieval toolkit.

Every error carries an `exit_code` used by the command line front end:
    1: usage errors (bad flags, missing input paths)
    2: data / format errors
    3: numeric failures (divergence, rank deficiency)
"""


class NcrError(Exception):
    exit_code = 2


class UsageError(NcrError):
    exit_code = 1


class MissingPathError(UsageError):
    def __init__(self, flag, path):
        super().__init__('%s: path does not exist: %s' % (flag, path))
        self.flag = flag
        self.path = path


class DataError(NcrError, ValueError):
    exit_code = 2


class NumericError(NcrError, ArithmeticError):
    exit_code = 3


class ZeroVectorError(DataError):
    def __init__(self, row_id=None, message=None):
        if message is None:
            if row_id is None:
                message = 'Cannot normalize a zero vector.'
            else:
                message = 'Cannot normalize zero vector (row id %s).' % row_id
        super().__init__(message)
        self.row_id = row_id


class DimensionMismatchError(DataError):
    def __init__(self, expected, actual, what='dimension'):
        super().__init__('%s mismatch: expected %s, got %s' %
                         (what, expected, actual))
        self.expected = expected
        self.actual = actual


class BadMagicError(DataError):
    def __init__(self, path, expected, actual):
        super().__init__('%s: bad magic %r (expected %r)' %
                         (path, actual, expected))
        self.path = path


class SizeMismatchError(DataError):
    pass


class IdCountMismatchError(DataError):
    pass


class DuplicateIdError(DataError):
    def __init__(self, item_id):
        super().__init__('Duplicate id: %s' % item_id)
        self.item_id = item_id


class IoFailureError(DataError):
    pass


class ParseError(DataError):
    def __init__(self, path, line_number, message):
        super().__init__('%s:%s: %s' % (path, line_number, message))
        self.path = path
        self.line_number = line_number


class OverlapError(DataError):
    def __init__(self, query_id, item_id):
        super().__init__('Query %s: id %s is both good and junk' %
                         (query_id, item_id))
        self.query_id = query_id
        self.item_id = item_id


class SelfLoopError(DataError):
    def __init__(self, path, line_number, node):
        super().__init__('%s:%s: self-loop on %s' % (path, line_number, node))
        self.line_number = line_number
        self.node = node


class ValidationError(DataError):
    pass


class TooFewSamplesError(DataError):
    pass


class EmptyPairsError(DataError):
    pass


class UnresolvableIdError(DataError):
    def __init__(self, item_id, where='descriptor set'):
        super().__init__('Id %s not found in %s' % (item_id, where))
        self.item_id = item_id


class InsufficientDiversityError(DataError):
    pass


class NoPositivesError(DataError):
    def __init__(self, query_id=None):
        if query_id is None:
            message = 'Average precision needs at least one positive.'
        else:
            message = 'Query %s has no positives.' % query_id
        super().__init__(message)
        self.query_id = query_id


class MissingGtError(DataError):
    def __init__(self, query_id):
        super().__init__('No ground truth for query %s' % query_id)
        self.query_id = query_id


class SingletonGroupError(DataError):
    def __init__(self, group_id):
        super().__init__('Group %s has fewer than 2 members' % group_id)
        self.group_id = group_id


class RankDeficientError(NumericError):
    pass


class DivergedLossError(NumericError):
    pass
