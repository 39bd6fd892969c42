import hashlib

import numpy as np
import pytest

from cli.main import dispatch
from utils import io


def _run(*argv):
    return dispatch([str(x) for x in argv], configure_logging=False)


def _sha256(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture
def synth_prefix(tmp_path):
    prefix = tmp_path / 'synth'
    assert _run('synth', 'gen', '--groups', 20, '--size', 4, '--dim', 16,
                '--pairs', 'True', '--out', prefix) == 0
    return prefix


def _files(prefix):
    return (prefix.with_name('synth.ncd'), prefix.with_name('synth.gt.tsv'))


def test_synth_then_holidays(synth_prefix, capsys):
    database, gt = _files(synth_prefix)
    assert synth_prefix.with_name('synth.ids').exists()
    assert synth_prefix.with_name('synth.pairs.tsv').exists()
    assert _run('eval', 'holidays', '--database', database, '--gt', gt) == 0
    out = capsys.readouterr().out
    assert out.endswith('aggregate\tholidays\t1\n')
    assert out.count('query\t') == 20


def test_text_report(synth_prefix, capsys):
    database, gt = _files(synth_prefix)
    assert _run('eval', 'ukb', '--database', database, '--gt', gt,
                '--format', 'text') == 0
    assert 'ukb ukb_score: 4.0000' in capsys.readouterr().out


def test_usage_errors(tmp_path, synth_prefix):
    database, _ = _files(synth_prefix)
    assert _run('pca', 'fit', '--input', database, '--dim', 2,
                '--no-such-flag', '--out', tmp_path / 'm.ncp') == 1
    assert _run('pca', 'fit', '--input', database, '--dim', 0, '--out',
                tmp_path / 'm.ncp') == 1
    assert _run('pca', 'fit', '--input', tmp_path / 'missing.ncd', '--dim',
                2, '--out', tmp_path / 'm.ncp') == 1
    assert _run('frobnicate') == 1
    assert not (tmp_path / 'm.ncp').exists()


def test_help_exits_cleanly(capsys):
    assert _run('pca', 'fit', '--help') == 0
    assert '--sample-cap' in capsys.readouterr().out


def test_threads_fall_back_to_environment(monkeypatch, synth_prefix):
    database, gt = _files(synth_prefix)
    monkeypatch.setenv('NCR_THREADS', '0')
    assert _run('eval', 'holidays', '--database', database, '--gt', gt) == 1
    assert _run('eval', 'holidays', '--database', database, '--gt', gt,
                '--threads', 2) == 0


def test_data_error(tmp_path, synth_prefix):
    database, gt = _files(synth_prefix)
    broken = tmp_path / 'broken.gt.tsv'
    broken.write_text(gt.read_text() + 'not_in_database\t0\n')
    assert _run('eval', 'holidays', '--database', database, '--gt',
                broken) == 2

    garbage = tmp_path / 'garbage.ncd'
    garbage.write_bytes(b'XXXX' + bytes(8))
    (tmp_path / 'garbage.ids').write_text('')
    assert _run('normalize', '--input', garbage, '--out',
                tmp_path / 'out.ncd') == 2


def test_numeric_error(tmp_path):
    prefix = tmp_path / 'flat'
    assert _run('synth', 'gen', '--groups', 10, '--size', 4, '--dim', 8,
                '--sigma', 0.1, '--intrinsic-dim', 3, '--out', prefix) == 0
    database = tmp_path / 'flat.ncd'
    assert _run('pca', 'fit', '--input', database, '--dim', 6, '--out',
                tmp_path / 'strict.ncp', '--strict-rank', 'True') == 3
    assert _run('pca', 'fit', '--input', database, '--dim', 6, '--out',
                tmp_path / 'padded.ncp') == 0
    assert io.read_pca_model(tmp_path / 'padded.ncp').d_out == 6


def test_yaml_config_defaults(tmp_path, synth_prefix):
    database, _ = _files(synth_prefix)
    config = tmp_path / 'config.yaml'
    config.write_text('pca fit:\n  dim: 3\n  sample_cap: 50\n')
    assert _run('pca', 'fit', '--config', config, '--input', database,
                '--out', tmp_path / 'from_config.ncp') == 0
    assert io.read_pca_model(tmp_path / 'from_config.ncp').d_out == 3
    assert _run('pca', 'fit', '--config', config, '--input', database,
                '--dim', 2, '--out', tmp_path / 'explicit.ncp') == 0
    assert io.read_pca_model(tmp_path / 'explicit.ncp').d_out == 2


def test_tsv_config_defaults(tmp_path, synth_prefix):
    database, _ = _files(synth_prefix)
    config = tmp_path / 'config.tsv'
    config.write_text('# shared\ndim\t5\nstrict_rank\tTrue\n')
    assert _run('pca', 'fit', '--config', config, '--input', database,
                '--out', tmp_path / 'model.ncp') == 0
    assert io.read_pca_model(tmp_path / 'model.ncp').d_out == 5


def test_missing_config(tmp_path):
    assert _run('synth', 'gen', '--config', tmp_path / 'nope.yaml') == 1


def test_bad_config_value(tmp_path, synth_prefix):
    database, _ = _files(synth_prefix)
    config = tmp_path / 'config.yaml'
    config.write_text('dim: -4\n')
    assert _run('pca', 'fit', '--config', config, '--input', database,
                '--out', tmp_path / 'model.ncp') == 1


def test_empty_manifest(tmp_path):
    manifest = tmp_path / 'empty.txt'
    manifest.write_text('# nothing to do\n\n')
    assert _run('run', manifest) == 0


def test_manifest_stops_at_failing_step(tmp_path):
    manifest = tmp_path / 'pipeline.txt'
    manifest.write_text('\n'.join([
        'ncr synth gen --groups 3 --size 2 --dim 4 --out %s' %
        (tmp_path / 'first'),
        'eval holidays --database %s --gt %s' %
        (tmp_path / 'missing.ncd', tmp_path / 'first.gt.tsv'),
        'synth gen --groups 3 --size 2 --dim 4 --out %s' %
        (tmp_path / 'third'),
    ]) + '\n')
    assert _run('run', manifest) == 1
    assert (tmp_path / 'first.ncd').exists()
    assert not (tmp_path / 'third.ncd').exists()


def test_manifest_cannot_nest(tmp_path):
    manifest = tmp_path / 'nested.txt'
    manifest.write_text('run other.txt\n')
    assert _run('run', manifest) == 1


def test_dimension_sweep_manifest(tmp_path):
    prefix = tmp_path / 'sweep'
    summary = tmp_path / 'summary.tsv'
    lines = [
        'synth gen --groups 30 --size 4 --dim 32 --sigma 0.2 --out %s' %
        prefix
    ]
    for dim in (4, 8, 16):
        model = tmp_path / ('pca%d.ncp' % dim)
        reduced = tmp_path / ('reduced%d.ncd' % dim)
        lines += [
            'pca fit --input %s.ncd --dim %d --out %s' % (prefix, dim, model),
            'pca apply --model %s --input %s.ncd --out %s' %
            (model, prefix, reduced),
            'eval holidays --database %s --gt %s.gt.tsv --out %s '
            '--append-summary %s --label D=%d' %
            (reduced, prefix, tmp_path / ('report%d.tsv' % dim), summary,
             dim),
        ]
    manifest = tmp_path / 'sweep.txt'
    manifest.write_text('\n'.join(lines) + '\n')
    assert _run('run', manifest) == 0

    rows = [line.split('\t') for line in summary.read_text().splitlines()]
    assert [row[:2] for row in rows] == [['D=4', 'holidays'],
                                         ['D=8', 'holidays'],
                                         ['D=16', 'holidays']]
    assert all(0 < float(row[2]) <= 1 for row in rows)


def test_query_output_independent_of_threads(tmp_path, synth_prefix):
    database, _ = _files(synth_prefix)
    outputs = []
    for threads, block_size in ((1, 1024), (4, 7)):
        out = tmp_path / ('ranked_%d.tsv' % threads)
        assert _run('index', 'query', '--database', database, '--queries',
                    database, '--k', 5, '--exclude-self', 'True',
                    '--threads', threads, '--block-size', block_size,
                    '--out', out) == 0
        outputs.append(_sha256(out))
    assert outputs[0] == outputs[1]
    first = (tmp_path / 'ranked_1.tsv').read_text().splitlines()[0]
    assert first.startswith('g0_0\t1\tg0_')


def test_reruns_are_byte_identical(tmp_path):
    hashes = []
    for run, threads in enumerate((1, 4)):
        out = tmp_path / ('run%d' % run)
        prefix = out / 'codes'
        common = ('--threads', threads, '--seed', 7)
        assert _run('synth', 'gen', '--groups', 30, '--size', 3, '--dim', 12,
                    '--sigma', 0.2, '--nuisance-dim', 3, '--nuisance-amp',
                    0.4, '--pairs', 'True', '--out', prefix, *common) == 0
        assert _run('pca', 'fit', '--input', out / 'codes.ncd', '--dim', 6,
                    '--sample-cap', 50, '--out', out / 'pca.ncp',
                    *common) == 0
        assert _run('proj', 'fit', '--input', out / 'codes.ncd', '--pairs',
                    out / 'codes.pairs.tsv', '--dim', 6, '--epochs', 3,
                    '--out', out / 'w.ncw', *common) == 0
        assert _run('proj', 'apply', '--model', out / 'w.ncw', '--input',
                    out / 'codes.ncd', '--out', out / 'projected.ncd',
                    *common) == 0
        assert _run('eval', 'holidays', '--database', out / 'projected.ncd',
                    '--gt', out / 'codes.gt.tsv', '--out',
                    out / 'holidays.tsv', *common) == 0
        names = ('codes.ncd', 'codes.ids', 'codes.gt.tsv', 'codes.pairs.tsv',
                 'pca.ncp', 'w.ncw', 'w.ncw.manifest.tsv', 'projected.ncd',
                 'holidays.tsv')
        hashes.append([_sha256(out / name) for name in names])
    assert hashes[0] == hashes[1]


def test_convert_between_csv_and_ncd(tmp_path, synth_prefix):
    database, _ = _files(synth_prefix)
    csv_path = tmp_path / 'codes.csv'
    back = tmp_path / 'back.ncd'
    assert _run('convert', '--input', database, '--out', csv_path) == 0
    assert _run('convert', '--input', csv_path, '--out', back) == 0
    original = io.read_ncd(database)
    converted = io.read_ncd(back)
    assert converted.ids == original.ids
    np.testing.assert_array_equal(converted.data, original.data)


def test_inputs_are_not_modified(tmp_path, synth_prefix):
    database, gt = _files(synth_prefix)
    pairs = synth_prefix.with_name('synth.pairs.tsv')
    before = [_sha256(p) for p in (database, gt, pairs)]
    assert _run('normalize', '--input', database, '--out',
                tmp_path / 'norm.ncd') == 0
    assert _run('proj', 'fit', '--input', database, '--pairs', pairs,
                '--dim', 4, '--epochs', 2, '--out', tmp_path / 'w.ncw') == 0
    assert _run('proj', 'apply', '--model', tmp_path / 'w.ncw', '--input',
                database, '--out', tmp_path / 'projected.ncd') == 0
    assert _run('eval', 'ukb', '--database', tmp_path / 'projected.ncd',
                '--gt', gt, '--out', tmp_path / 'ukb.tsv') == 0
    assert [_sha256(p) for p in (database, gt, pairs)] == before
    assert io.read_ncd(tmp_path / 'projected.ncd').dim == 4


def test_pair_commands(tmp_path):
    graph = tmp_path / 'graph.tsv'
    graph.write_text('a\tb\nb\tc\nd\te\ne\tf\n')
    classes = tmp_path / 'classes.tsv'
    classes.write_text('a\tx\nb\tx\nc\tx\nd\ty\ne\ty\nf\ty\n')
    mined = tmp_path / 'mined.tsv'
    assert _run('pairs', 'mine', '--graph', graph, '--classes', classes,
                '--out', mined) == 0
    pairs = io.read_pairs(mined)
    assert pairs.positives == [('a', 'c'), ('d', 'f')]
    assert len(pairs.negatives) == 2

    subset = tmp_path / 'subset.tsv'
    assert _run('pairs', 'subset', '--pairs', mined, '--budget', 1, '--out',
                subset) == 0
    assert io.read_pairs(subset).positives == [('a', 'c')]

    negatives = tmp_path / 'negatives.tsv'
    assert _run('pairs', 'negatives', '--classes', classes, '--count', 3,
                '--out', negatives) == 0
    assert len(io.read_pairs(negatives).negatives) == 3


def test_negative_counts_are_usage_errors(tmp_path, synth_prefix):
    graph = tmp_path / 'graph.tsv'
    graph.write_text('a\tb\nb\tc\n')
    classes = tmp_path / 'classes.tsv'
    classes.write_text('a\tx\nb\tx\nc\tx\nd\ty\n')
    out = tmp_path / 'pairs.tsv'
    assert _run('pairs', 'negatives', '--classes', classes, '--count', -1,
                '--out', out) == 1
    assert _run('pairs', 'mine', '--graph', graph, '--classes', classes,
                '--num-negatives', -1, '--out', out) == 1
    assert not out.exists()

    database, _ = _files(synth_prefix)
    pairs = synth_prefix.with_name('synth.pairs.tsv')
    assert _run('proj', 'fit', '--input', database, '--pairs', pairs,
                '--dim', 4, '--epochs', -1, '--out', tmp_path / 'w.ncw') == 1
    assert _run('proj', 'fit', '--input', database, '--pairs', pairs,
                '--dim', 4, '--max-backoffs', -1, '--out',
                tmp_path / 'w.ncw') == 1


@pytest.mark.parametrize('flags', [
    ('--groups', 0, '--size', 4, '--dim', 16),
    ('--groups', 5, '--size', -2, '--dim', 16),
    ('--groups', 5, '--size', 4, '--dim', 0),
    ('--groups', 5, '--size', 4, '--dim', 16, '--nuisance-dim', -1),
])
def test_synth_rejects_bad_sizes(tmp_path, flags):
    assert _run('synth', 'gen', *flags, '--out', tmp_path / 's') == 1
    assert not (tmp_path / 's.ncd').exists()


def test_unwritable_outputs_are_data_errors(tmp_path, synth_prefix):
    database, gt = _files(synth_prefix)
    taken = tmp_path / 'taken'
    taken.mkdir()
    assert _run('eval', 'holidays', '--database', database, '--gt', gt,
                '--out', taken) == 2
    assert _run('eval', 'holidays', '--database', database, '--gt', gt,
                '--out', tmp_path / 'report.tsv', '--append-summary',
                taken) == 2
    assert _run('index', 'query', '--database', database, '--queries',
                database, '--out', taken) == 2


def test_convert_keeps_layer_tag(tmp_path, synth_prefix):
    database, _ = _files(synth_prefix)
    assert io.read_ncd(database).layer_tag == 'synthetic'
    tagged = tmp_path / 'tagged.ncd'
    assert _run('convert', '--input', database, '--layer-tag', 'fc6',
                '--out', tagged) == 0
    assert io.read_ncd(tagged).layer_tag == 'fc6'
    assert _run('convert', '--input', tagged, '--out',
                tmp_path / 'copy.ncd') == 0
    assert io.read_ncd(tmp_path / 'copy.ncd').layer_tag == 'fc6'
