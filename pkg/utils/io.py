"""Readers and writers for descriptor sets, models, graphs and ground truth.

Binary formats (all integers unsigned 32-bit little-endian, all values 32-bit
little-endian IEEE-754 floats, row-major):

    NCD1: magic, n, d, data[n * d]; ids in a sidecar UTF-8 text file, one
          id per line.
    NCP1: magic, d, D, mean[d], eigvals[D], components[D * d]
    NCW1: magic, d_in, D, W[D * d_in]

Projection models additionally get a `<path>.manifest.tsv` (key\\tvalue)
recording training hyperparameters and, for two-stage models, the name of
the NCP1 file holding the pre-PCA stage.

Text formats are tab separated:
    ground truth (ranked): <query_id>\\t<good|ok|junk>\\t<item_id>
    ground truth (group):  <item_id>\\t<group_id>[\\tquery]
    match graph:           <id_a>\\t<id_b>
    pairs:                 <id_a>\\t<id_b>\\t<pos|neg>
    ranked lists:          <query_id>\\t<rank>\\t<item_id>\\t<distance>
"""

import collections
import csv
import logging
from pathlib import Path

import numpy as np

from compression.pca import PcaModel
from compression.projection import ProjectionModel
from evaluation.groundtruth import GroupGroundTruth, RankedGroundTruth
from pairs.graph import MatchGraph, PairSet, canonical_pair
from utils.descriptors import DescriptorSet
from utils.errors import (BadMagicError, DataError, DuplicateIdError,
                          IdCountMismatchError, IoFailureError, ParseError,
                          SelfLoopError, SizeMismatchError, ValidationError)

NCD_MAGIC = b'NCD1'
NCP_MAGIC = b'NCP1'
NCW_MAGIC = b'NCW1'
HEADER_BYTES = 12
FLOAT = np.dtype('<f4')
UINT = np.dtype('<u4')
RELEVANCE_LABELS = ('good', 'ok', 'junk')
PAIR_LABELS = ('pos', 'neg')


def default_ids_path(path):
    return Path(path).with_suffix('.ids')


def manifest_path(path):
    path = Path(path)
    return path.with_name(path.name + '.manifest.tsv')


def _read_bytes(path):
    try:
        with open(path, 'rb') as f:
            return f.read()
    except OSError as e:
        raise IoFailureError('Could not read %s: %s' % (path, e)) from e


def _write_bytes(path, payload):
    try:
        with open(path, 'wb') as f:
            f.write(payload)
    except OSError as e:
        raise IoFailureError('Could not write %s: %s' % (path, e)) from e


def read_lines(path):
    raw = _read_bytes(path)
    try:
        text = raw.decode('utf-8')
    except UnicodeDecodeError as e:
        raise ParseError(path, '-', 'not valid UTF-8 (%s)' % e) from e
    return text.split('\n')


def _write_lines(path, lines):
    _write_bytes(path, ''.join(x + '\n' for x in lines).encode('utf-8'))


def _to_float32(array, what):
    array = np.asarray(array, dtype=np.float64)
    with np.errstate(over='ignore'):
        stored = array.astype(FLOAT)
    if not np.all(np.isfinite(stored)):
        raise ValidationError('%s has values not representable as float32.' %
                              what)
    return stored


def _parse_header(path, raw, magic):
    if len(raw) < HEADER_BYTES:
        raise SizeMismatchError('%s: file has %s bytes, shorter than the '
                                '%s-byte header' % (path, len(raw),
                                                    HEADER_BYTES))
    if raw[:4] != magic:
        raise BadMagicError(path, magic, raw[:4])
    first, second = np.frombuffer(raw, dtype=UINT, count=2, offset=4)
    return int(first), int(second)


def _read_floats(path, raw, num_values, offset):
    expected = offset + 4 * num_values
    if len(raw) != expected:
        raise SizeMismatchError('%s: expected %s bytes, found %s' %
                                (path, expected, len(raw)))
    values = np.frombuffer(raw, dtype=FLOAT, count=num_values, offset=offset)
    values = values.astype(np.float64)
    if not np.all(np.isfinite(values)):
        raise ValidationError('%s: contains non-finite values' % path)
    return values


def _check_id(item_id):
    if not item_id or any(c in item_id for c in '\t\n\r'):
        raise ValidationError('Invalid id %r: ids must be non-empty and '
                              'contain no tabs or newlines' % item_id)


def read_ncd(path, ids_path=None, layer_tag=None):
    """Read an NCD1 descriptor file and its sidecar ids file.

    The layer tag comes from `layer_tag` if given, else from the
    `<path>.manifest.tsv` sidecar written by write_ncd, if present.

    Returns:
        descriptors (DescriptorSet)
    """
    ids_path = default_ids_path(path) if ids_path is None else ids_path
    raw = _read_bytes(path)
    num_rows, dim = _parse_header(path, raw, NCD_MAGIC)
    if num_rows < 1 or dim < 1:
        raise ValidationError('%s: header has n=%s, d=%s; both must be >= 1'
                              % (path, num_rows, dim))
    values = _read_floats(path, raw, num_rows * dim, HEADER_BYTES)

    ids = [x.rstrip('\r') for x in read_lines(ids_path)]
    ids = [x for x in ids if x]
    if len(ids) != num_rows:
        raise IdCountMismatchError(
            '%s: %s ids for %s rows in %s' % (ids_path, len(ids), num_rows,
                                              path))
    for item_id in ids:
        if '\t' in item_id:
            raise ParseError(ids_path, '-', 'ids must not contain tabs')
    seen = set()
    for item_id in ids:
        if item_id in seen:
            raise DuplicateIdError(item_id)
        seen.add(item_id)
    if layer_tag is None and manifest_path(path).exists():
        layer_tag = read_key_values(manifest_path(path)).get('layer_tag')
    return DescriptorSet(ids, values.reshape(num_rows, dim), layer_tag)


def write_ncd(descriptors, path, ids_path=None):
    ids_path = default_ids_path(path) if ids_path is None else ids_path
    if len(descriptors) < 1:
        raise ValidationError('Cannot write an empty descriptor set.')
    for item_id in descriptors.ids:
        _check_id(item_id)
    data = _to_float32(descriptors.data, 'Descriptor set')
    header = NCD_MAGIC + np.array([len(descriptors), descriptors.dim],
                                  dtype=UINT).tobytes()
    _write_bytes(path, header + data.tobytes())
    _write_lines(ids_path, descriptors.ids)

    manifest = manifest_path(path)
    if descriptors.layer_tag:
        _check_id(descriptors.layer_tag)
        _write_lines(manifest, ['layer_tag\t%s' % descriptors.layer_tag])
    elif manifest.exists():
        try:
            manifest.unlink()
        except OSError as e:
            raise IoFailureError('Could not remove stale %s: %s' %
                                 (manifest, e)) from e


def write_pca_model(model, path):
    header = NCP_MAGIC + np.array([model.d_in, model.d_out],
                                  dtype=UINT).tobytes()
    payload = b''.join(
        _to_float32(x, 'PCA model').tobytes()
        for x in (model.mean, model.eigvals, model.components))
    _write_bytes(path, header + payload)


def read_pca_model(path):
    raw = _read_bytes(path)
    dim, num_components = _parse_header(path, raw, NCP_MAGIC)
    if not 1 <= num_components <= dim:
        raise ValidationError('%s: header has d=%s, D=%s; need 1 <= D <= d'
                              % (path, dim, num_components))
    values = _read_floats(path, raw,
                          dim + num_components + num_components * dim,
                          HEADER_BYTES)
    mean = values[:dim]
    eigvals = values[dim:dim + num_components]
    components = values[dim + num_components:].reshape(num_components, dim)
    return PcaModel(mean, components, eigvals)


def _format_value(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_value(text):
    for parse in (int, float):
        try:
            return parse(text)
        except ValueError:
            pass
    if text in ('True', 'False'):
        return text == 'True'
    return text


def read_key_values(path):
    """Read a `key\\tvalue` TSV file, skipping blank and '#' lines."""
    output = collections.OrderedDict()
    for line_number, line in enumerate(read_lines(path), 1):
        line = line.rstrip('\r')
        if not line.strip() or line.startswith('#'):
            continue
        fields = line.split('\t')
        if len(fields) != 2:
            raise ParseError(path, line_number, 'expected key<TAB>value')
        output[fields[0]] = fields[1]
    return output


def write_projection_model(model, path):
    """Write W as NCW1 plus a manifest with hyperparameters and pre-PCA."""
    path = Path(path)
    header = NCW_MAGIC + np.array([model.weights.shape[1], model.d_out],
                                  dtype=UINT).tobytes()
    _write_bytes(path,
                 header + _to_float32(model.weights, 'W').tobytes())

    lines = []
    if model.pre_pca is not None:
        pre_pca_path = path.with_name(path.name + '.pre_pca.ncp')
        write_pca_model(model.pre_pca, pre_pca_path)
        lines.append('pre_pca\t%s' % pre_pca_path.name)
    for key in sorted(model.hyperparams):
        lines.append('%s\t%s' % (key, _format_value(model.hyperparams[key])))
    _write_lines(manifest_path(path), lines)


def read_projection_model(path):
    path = Path(path)
    raw = _read_bytes(path)
    input_dim, output_dim = _parse_header(path, raw, NCW_MAGIC)
    if not 1 <= output_dim <= input_dim:
        raise ValidationError('%s: header has d_in=%s, D=%s; need '
                              '1 <= D <= d_in' % (path, input_dim, output_dim))
    weights = _read_floats(path, raw, input_dim * output_dim,
                           HEADER_BYTES).reshape(output_dim, input_dim)

    pre_pca = None
    hyperparams = {}
    manifest = manifest_path(path)
    if manifest.exists():
        for key, value in read_key_values(manifest).items():
            if key == 'pre_pca':
                pre_pca = read_pca_model(path.parent / value)
            else:
                hyperparams[key] = _parse_value(value)
    return ProjectionModel(weights, pre_pca=pre_pca, hyperparams=hyperparams)


def _tsv_records(path, num_fields):
    """Yield (line_number, fields) for non-blank lines of a TSV file.

    Args:
        num_fields (int or tuple): Allowed field counts.
    """
    if isinstance(num_fields, int):
        num_fields = (num_fields, )
    for line_number, line in enumerate(read_lines(path), 1):
        line = line.rstrip('\r')
        if not line.strip() or line.startswith('#'):
            continue
        fields = line.split('\t')
        if len(fields) not in num_fields or not all(fields):
            raise ParseError(
                path, line_number, 'expected %s tab-separated fields' %
                ' or '.join(str(x) for x in num_fields))
        yield line_number, fields


def read_ground_truth(path, format_flag):
    """Read ranked ('ranked') or group ('group') form ground truth.

    Returns:
        gt (RankedGroundTruth or GroupGroundTruth)
    """
    if format_flag == 'ranked':
        queries = collections.OrderedDict()
        for line_number, (query_id, label, item_id) in _tsv_records(path, 3):
            if label not in RELEVANCE_LABELS:
                raise ParseError(path, line_number,
                                 'unknown relevance label %r' % label)
            relevance = queries.setdefault(query_id,
                                           {x: set() for x in RELEVANCE_LABELS})
            relevance[label].add(item_id)
        return RankedGroundTruth(queries)
    elif format_flag == 'group':
        group_of = {}
        designated = []
        for line_number, fields in _tsv_records(path, (2, 3)):
            item_id, group_id = fields[:2]
            if len(fields) == 3:
                if fields[2] != 'query':
                    raise ParseError(path, line_number,
                                     'third field must be "query"')
                designated.append(item_id)
            if item_id in group_of and group_of[item_id] != group_id:
                raise ParseError(path, line_number,
                                 'item %s listed in two groups' % item_id)
            group_of[item_id] = group_id
        try:
            return GroupGroundTruth(group_of, designated)
        except DataError as e:
            raise ParseError(path, '-', str(e)) from e
    else:
        raise ValueError('Unknown ground truth format: %s' % format_flag)


def write_ground_truth(gt, path):
    lines = []
    if gt.form == 'ranked':
        for query_id in gt.query_ids():
            relevance = gt[query_id]
            for label in RELEVANCE_LABELS:
                for item_id in sorted(getattr(relevance, label)):
                    lines.append('%s\t%s\t%s' % (query_id, label, item_id))
    else:
        for item_id in sorted(gt.group_of):
            group = gt.group_of[item_id]
            suffix = ''
            if gt.designated.get(group) == item_id:
                suffix = '\tquery'
            lines.append('%s\t%s%s' % (item_id, group, suffix))
    _write_lines(path, lines)


def read_match_graph(path, class_of=None):
    """Read an undirected edge list; duplicate edges are collapsed."""
    graph = MatchGraph(class_of=class_of)
    for line_number, (a, b) in _tsv_records(path, 2):
        if a == b:
            raise SelfLoopError(path, line_number, a)
        try:
            graph.add_edge(a, b)
        except ValidationError as e:
            raise ParseError(path, line_number, str(e)) from e
    return graph


def read_classes(path):
    """Read an `<item_id>\\t<class>` file (same layout as group form)."""
    return read_ground_truth(path, 'group').group_of


def write_match_graph(graph, path):
    _write_lines(path, ['%s\t%s' % edge for edge in graph.edges()])


def read_pairs(path):
    positives, negatives = [], []
    for line_number, (a, b, label) in _tsv_records(path, 3):
        if label not in PAIR_LABELS:
            raise ParseError(path, line_number,
                             'pair label must be pos or neg, got %r' % label)
        if a == b:
            raise ParseError(path, line_number, 'self pair %s' % a)
        (positives if label == 'pos' else negatives).append(
            canonical_pair(a, b))
    try:
        return PairSet(positives, negatives)
    except ValidationError as e:
        raise ParseError(path, '-', str(e)) from e


def write_pairs(pairs, path):
    lines = ['%s\t%s\tpos' % pair for pair in pairs.positives]
    lines += ['%s\t%s\tneg' % pair for pair in pairs.negatives]
    _write_lines(path, lines)


def format_ranked_lists(query_ids, ranked_lists):
    lines = []
    for query_id, ranked in zip(query_ids, ranked_lists):
        for rank, (item_id, distance) in enumerate(ranked, 1):
            lines.append('%s\t%d\t%s\t%.9g' % (query_id, rank, item_id,
                                               distance))
    return lines


def write_ranked_lists(query_ids, ranked_lists, path):
    _write_lines(path, format_ranked_lists(query_ids, ranked_lists))


def read_csv_descriptors(path, layer_tag=None):
    """Read `id,v_1,...,v_d` rows into a DescriptorSet."""
    ids, rows = [], []
    try:
        with open(path, 'r', newline='', encoding='utf-8') as f:
            for line_number, record in enumerate(csv.reader(f), 1):
                if not record:
                    continue
                try:
                    rows.append([float(x) for x in record[1:]])
                except ValueError as e:
                    raise ParseError(path, line_number, str(e)) from e
                ids.append(record[0])
    except OSError as e:
        raise IoFailureError('Could not read %s: %s' % (path, e)) from e
    except UnicodeDecodeError as e:
        raise ParseError(path, '-', 'not valid UTF-8 (%s)' % e) from e
    if not rows:
        raise ValidationError('%s: no descriptor rows' % path)
    if len(set(len(x) for x in rows)) != 1:
        raise ValidationError('%s: rows have different lengths' % path)
    logging.info('Read %s rows from %s', len(rows), path)
    return DescriptorSet(ids, np.array(rows), layer_tag)


def write_csv_descriptors(descriptors, path):
    try:
        with open(path, 'w', newline='', encoding='utf-8') as f:
            writer = csv.writer(f, lineterminator='\n')
            for item_id, row in zip(descriptors.ids, descriptors.data):
                writer.writerow([item_id] + ['%.9g' % x for x in row])
    except OSError as e:
        raise IoFailureError('Could not write %s: %s' % (path, e)) from e
