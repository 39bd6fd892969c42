import numpy as np

from utils.errors import (DimensionMismatchError, DuplicateIdError,
                          UnresolvableIdError, ValidationError)


class DescriptorSet():
    """Immutable (n, d) matrix of image descriptors with string ids.

    Row i of `data` belongs to `ids[i]`. Data is stored as float64; the
    array is marked read-only.
    """

    def __init__(self, ids, data, layer_tag=None):
        """
        Args:
            ids (list of str): n unique ids.
            data (array-like): Shape (n, d), finite.
            layer_tag (str, optional): Free-form provenance, e.g. 'fc6'.
        """
        ids = [str(x) for x in ids]
        data = np.array(data, dtype=np.float64)
        if data.ndim != 2:
            raise ValidationError(
                'Descriptor data must be 2-dimensional, got shape %s' %
                (data.shape, ))
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise ValidationError(
                'Descriptor set must have n >= 1 and d >= 1, got %s' %
                (data.shape, ))
        if len(ids) != data.shape[0]:
            raise DimensionMismatchError(data.shape[0], len(ids), 'id count')
        if not np.all(np.isfinite(data)):
            row = int(np.flatnonzero(~np.all(np.isfinite(data), axis=1))[0])
            raise ValidationError('Non-finite value in row %s' % ids[row])

        self._row_of = {}
        for i, item_id in enumerate(ids):
            if item_id in self._row_of:
                raise DuplicateIdError(item_id)
            self._row_of[item_id] = i

        data.flags.writeable = False
        self._ids = tuple(ids)
        self._data = data
        self.layer_tag = layer_tag

    @property
    def ids(self):
        return self._ids

    @property
    def data(self):
        return self._data

    @property
    def dim(self):
        return self._data.shape[1]

    def __len__(self):
        return self._data.shape[0]

    def __contains__(self, item_id):
        return item_id in self._row_of

    def row_of(self, item_id):
        try:
            return self._row_of[item_id]
        except KeyError:
            raise UnresolvableIdError(item_id) from None

    def vector(self, item_id):
        return self._data[self.row_of(item_id)]

    def rows(self, ids):
        return np.array([self.row_of(x) for x in ids], dtype=np.int64)

    def subset(self, ids):
        ids = list(ids)
        return DescriptorSet(ids, self._data[self.rows(ids)], self.layer_tag)

    def without(self, ids):
        ids = set(ids)
        return self.subset([x for x in self._ids if x not in ids])

    def with_data(self, data, layer_tag=None):
        """New set with the same ids and `data` replacing the matrix."""
        return DescriptorSet(
            self._ids, data,
            self.layer_tag if layer_tag is None else layer_tag)

    def concatenate(self, other):
        return DescriptorSet(
            self._ids + other.ids, np.vstack([self._data, other.data]),
            self.layer_tag)

    def __str__(self):
        output = f'{{n: {len(self)}, d: {self.dim}'
        if self.layer_tag:
            output += f', layer: {self.layer_tag}'
        return output + '}'
