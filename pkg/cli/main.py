"""Neural-code image retrieval: compress, learn projections, search and evaluate.

Exit codes: 0 success, 1 usage error, 2 data / format error, 3 numeric
failure.
"""

import argparse
import functools
import logging
import os
import pprint
import sys
from pathlib import Path

from compression.pca import DEFAULT_SAMPLE_CAP, apply_pca, fit_pca_set
from compression.projection import (TrainConfig, apply_projection,
                                    fit_projection)
from cli.config import apply_config, load_config
from cli.manifest import run_manifest
from evaluation.protocols import (OK_POLICIES, QUERY_RULES, evaluate_holidays,
                                  evaluate_oxford, evaluate_ukb)
from evaluation.metrics import AP_VARIANTS
from pairs.graph import PairSet
from pairs.mining import (DEFAULT_BUDGET, greedy_unique_subset,
                          mine_candidate_pairs, mine_pairs, sample_negatives)
from retrieval.index import DEFAULT_BLOCK_SIZE, build_index
from synth.generate import SynthSpec, generate, generate_nuisance_pairs
from utils import io
from utils.distance import normalize_set
from utils.errors import (IoFailureError, MissingPathError, NcrError,
                          UsageError)
from utils.log import setup_logging
from utils.misc import (non_negative_float, non_negative_int, parse_bool,
                        positive_int)

DEFAULT_SEED = 42
THREADS_ENV = 'NCR_THREADS'


class ArgumentParser(argparse.ArgumentParser):
    """argparse parser that raises UsageError instead of exiting."""

    def error(self, message):
        raise UsageError('%s%s: error: %s' %
                         (self.format_usage(), self.prog, message))


def _formatter(prog):
    return argparse.ArgumentDefaultsHelpFormatter(prog, max_help_position=36)


def _common_parser():
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument('--config',
                        help='YAML or TSV (key<TAB>value) file of defaults.')
    parser.add_argument('--threads',
                        type=positive_int,
                        default=os.environ.get(THREADS_ENV, '1'),
                        help='Worker threads; falls back to $%s.' %
                        THREADS_ENV)
    parser.add_argument('--seed', type=int, default=DEFAULT_SEED)
    parser.add_argument('--verbose', action='store_true')
    parser.add_argument('--quiet', action='store_true')
    parser.add_argument('--log-file', help='Also log to this file.')
    return parser


def _add_descriptors(parser, name, required=True, help=None):
    """Add --<name> and --<name>-ids flags for a descriptor file."""
    parser.add_argument('--%s' % name, required=required, help=help)
    parser.add_argument('--%s-ids' % name,
                        help='Ids file; defaults to the .ids sidecar.')


def _add_output(parser, with_ids=True):
    parser.add_argument('--out', required=True)
    if with_ids:
        parser.add_argument('--out-ids',
                            help='Ids file; defaults to the .ids sidecar.')


def _add_eval_output(parser):
    parser.add_argument('--format', choices=['tsv', 'text'], default='tsv')
    parser.add_argument('--out', help='Write the report here, not stdout.')
    parser.add_argument('--label',
                        help='Row label for --append-summary.')
    parser.add_argument('--append-summary',
                        help='Append "<label>\\t<protocol>\\t<aggregate>".')
    parser.add_argument('--normalize',
                        type=parse_bool,
                        default=True,
                        help='L2-normalize descriptors before indexing.')


def _read_descriptors(path, ids_path=None, layer_tag=None):
    if Path(path).suffix == '.csv':
        return io.read_csv_descriptors(path, layer_tag)
    return io.read_ncd(path, ids_path, layer_tag)


def _prepare_out(path):
    try:
        Path(path).parent.mkdir(exist_ok=True, parents=True)
    except OSError as e:
        raise IoFailureError('Could not create directory for %s: %s' %
                             (path, e)) from e
    return path


def _write_text(path, text, mode='w'):
    try:
        with open(_prepare_out(path), mode) as f:
            f.write(text)
    except OSError as e:
        raise IoFailureError('Could not write %s: %s' % (path, e)) from e


def _write_descriptors(descriptors, args):
    _prepare_out(args.out)
    io.write_ncd(descriptors, args.out, args.out_ids)
    logging.info('Wrote %s to %s', descriptors, args.out)


def _emit(text, out=None):
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        _write_text(out, text)


def cmd_normalize(args):
    descriptors = _read_descriptors(args.input, args.input_ids)
    _write_descriptors(normalize_set(descriptors), args)


def cmd_pca_fit(args):
    descriptors = _read_descriptors(args.input, args.input_ids)
    exclude_ids = None
    if args.exclude_ids:
        exclude_ids = [
            x.strip() for x in io.read_lines(args.exclude_ids) if x.strip()
        ]
    model = fit_pca_set(descriptors,
                        args.dim,
                        seed=args.seed,
                        sample_cap=args.sample_cap,
                        exclude_ids=exclude_ids,
                        strict_rank=args.strict_rank)
    io.write_pca_model(model, _prepare_out(args.out))
    logging.info('Wrote PCA %s -> %s to %s', model.d_in, model.d_out,
                 args.out)


def cmd_pca_apply(args):
    model = io.read_pca_model(args.model)
    descriptors = _read_descriptors(args.input, args.input_ids)
    _write_descriptors(
        apply_pca(model, descriptors, args.renormalize, args.whiten), args)


def cmd_proj_fit(args):
    descriptors = _read_descriptors(args.input, args.input_ids)
    if args.normalize:
        descriptors = normalize_set(descriptors)
    pairs = io.read_pairs(args.pairs)
    cfg = TrainConfig(dim=args.dim,
                      tau_pos=args.tau_pos,
                      tau_neg=args.tau_neg,
                      eta0=args.eta0,
                      decay=args.decay,
                      epochs=args.epochs,
                      batch_size=args.batch_size,
                      seed=args.seed,
                      max_backoffs=args.max_backoffs,
                      two_stage_min_dim=args.two_stage_min_dim,
                      pre_pca_dim=args.pre_pca_dim,
                      sample_cap=args.sample_cap)
    model = fit_projection(descriptors, pairs, cfg, verbose=args.verbose)
    io.write_projection_model(model, _prepare_out(args.out))
    logging.info('Wrote projection %s -> %s to %s', model.d_in, model.d_out,
                 args.out)


def cmd_proj_apply(args):
    model = io.read_projection_model(args.model)
    descriptors = _read_descriptors(args.input, args.input_ids)
    _write_descriptors(apply_projection(model, descriptors, args.renormalize),
                       args)


def cmd_pairs_mine(args):
    class_of = io.read_classes(args.classes) if args.classes else None
    graph = io.read_match_graph(args.graph, class_of)
    if args.greedy:
        pairs = mine_pairs(graph, args.budget, args.num_negatives, args.seed)
    else:
        pairs = PairSet(mine_candidate_pairs(graph))
    io.write_pairs(pairs, _prepare_out(args.out))
    logging.info('Wrote %s positive and %s negative pairs to %s',
                 len(pairs.positives), len(pairs.negatives), args.out)


def cmd_pairs_subset(args):
    pairs = io.read_pairs(args.pairs)
    subset = PairSet(greedy_unique_subset(pairs.positives, args.budget),
                     pairs.negatives)
    io.write_pairs(subset, _prepare_out(args.out))
    logging.info('Kept %s of %s positive pairs', len(subset.positives),
                 len(pairs.positives))


def cmd_pairs_negatives(args):
    class_of = io.read_classes(args.classes)
    positives = []
    if args.pairs:
        positives = io.read_pairs(args.pairs).positives
    count = args.count
    if count is None:
        if not positives:
            raise UsageError('--count is required without --pairs')
        count = len(positives)
    pairs = PairSet(positives, sample_negatives(class_of, count, args.seed))
    io.write_pairs(pairs, _prepare_out(args.out))


def cmd_index_query(args):
    database = _read_descriptors(args.database, args.database_ids)
    queries = _read_descriptors(args.queries, args.queries_ids)
    if args.normalize:
        queries = normalize_set(queries)
    index = build_index(database, normalize=args.normalize)
    exclusions = None
    if args.exclude_self:
        exclusions = [{x} for x in queries.ids]
    ranked_lists = index.batch_query(queries,
                                     args.k,
                                     exclusions,
                                     threads=args.threads,
                                     block_size=args.block_size)
    lines = io.format_ranked_lists(queries.ids, ranked_lists)
    _emit(''.join(line + '\n' for line in lines), args.out)


def _finish_eval(report, args):
    _emit(report.format(args.format), args.out)
    logging.info('%s %s: %.4f over %s queries', report.protocol,
                 report.metric_name, report.aggregate, report.num_queries)
    if args.append_summary:
        label = args.label if args.label is not None else args.database
        _write_text(args.append_summary, report.summary_row(label) + '\n',
                    'a')


def cmd_eval_oxford(args):
    database = _read_descriptors(args.database, args.database_ids)
    queries = _read_descriptors(args.queries, args.queries_ids)
    gt = io.read_ground_truth(args.gt, 'ranked')
    distractors = None
    if args.distractors:
        distractors = _read_descriptors(args.distractors,
                                        args.distractors_ids)
        if args.normalize:
            distractors = normalize_set(distractors)
    if args.normalize:
        queries = normalize_set(queries)
    index = build_index(database, normalize=args.normalize)
    report = evaluate_oxford(index,
                             queries,
                             gt,
                             ok_policy=args.ok_policy,
                             ap_variant=args.ap_variant,
                             distractors=distractors,
                             threads=args.threads)
    _finish_eval(report, args)


def cmd_eval_holidays(args):
    database = _read_descriptors(args.database, args.database_ids)
    gt = io.read_ground_truth(args.gt, 'group')
    index = build_index(database, normalize=args.normalize)
    report = evaluate_holidays(index,
                               gt,
                               query_rule=args.query_rule,
                               ap_variant=args.ap_variant,
                               threads=args.threads)
    _finish_eval(report, args)


def cmd_eval_ukb(args):
    database = _read_descriptors(args.database, args.database_ids)
    gt = io.read_ground_truth(args.gt, 'group')
    index = build_index(database, normalize=args.normalize)
    _finish_eval(evaluate_ukb(index, gt, threads=args.threads), args)


def cmd_synth_gen(args):
    spec = SynthSpec(groups=args.groups,
                     size=args.size,
                     dim=args.dim,
                     sigma=args.sigma,
                     nuisance_dim=args.nuisance_dim,
                     nuisance_amp=args.nuisance_amp,
                     intrinsic_dim=args.intrinsic_dim,
                     seed=args.seed)
    descriptors, gt = generate(spec)
    prefix = Path(_prepare_out(args.out))
    io.write_ncd(descriptors, prefix.with_name(prefix.name + '.ncd'),
                 prefix.with_name(prefix.name + '.ids'))
    io.write_ground_truth(gt, prefix.with_name(prefix.name + '.gt.tsv'))
    if args.pairs:
        pairs = generate_nuisance_pairs(descriptors, gt, args.seed)
        io.write_pairs(pairs, prefix.with_name(prefix.name + '.pairs.tsv'))
    logging.info('Wrote synthetic set %s with prefix %s', descriptors,
                 prefix)


def cmd_convert(args):
    descriptors = _read_descriptors(args.input, args.input_ids,
                                    args.layer_tag)
    if Path(args.out).suffix == '.csv':
        io.write_csv_descriptors(descriptors, _prepare_out(args.out))
        logging.info('Wrote %s to %s', descriptors, args.out)
    else:
        _write_descriptors(descriptors, args)


def cmd_run(args):
    return run_manifest(args.manifest,
                        functools.partial(dispatch, configure_logging=False))


def _leaf(subparsers, name, command, run, common, input_paths, help=None):
    parser = subparsers.add_parser(name,
                                   parents=[common],
                                   help=help,
                                   description=help,
                                   formatter_class=_formatter)
    parser.set_defaults(run=run, command=command, input_paths=input_paths)
    return parser


def build_parser():
    """Returns (parser, leaves) where leaves maps 'pca fit' etc. to parsers."""
    common = _common_parser()
    parser = ArgumentParser(prog='ncr.py',
                            description=__doc__.split('\n')[0],
                            formatter_class=_formatter)
    commands = parser.add_subparsers(dest='group', metavar='COMMAND')
    commands.required = True
    leaves = {}

    def group(name, help):
        subparsers = commands.add_parser(
            name, help=help, description=help,
            formatter_class=_formatter).add_subparsers(dest='action',
                                                       metavar='ACTION')
        subparsers.required = True
        return subparsers

    leaves['normalize'] = p = _leaf(commands, 'normalize', 'normalize',
                                    cmd_normalize, common,
                                    ('input', 'input_ids'),
                                    'L2-normalize every descriptor.')
    _add_descriptors(p, 'input')
    _add_output(p)

    pca = group('pca', 'PCA compression.')
    leaves['pca fit'] = p = _leaf(pca, 'fit', 'pca fit', cmd_pca_fit, common,
                                  ('input', 'input_ids', 'exclude_ids'),
                                  'Fit a PCA model (NCP1).')
    _add_descriptors(p, 'input')
    p.add_argument('--dim', type=positive_int, required=True)
    p.add_argument('--sample-cap', type=positive_int,
                   default=DEFAULT_SAMPLE_CAP)
    p.add_argument('--exclude-ids',
                   help='Ids (one per line) left out of PCA training.')
    p.add_argument('--strict-rank', type=parse_bool, default=False,
                   help='Fail instead of padding when dim exceeds the rank.')
    _add_output(p, with_ids=False)

    leaves['pca apply'] = p = _leaf(pca, 'apply', 'pca apply', cmd_pca_apply,
                                    common, ('model', 'input', 'input_ids'),
                                    'Project descriptors with a PCA model.')
    p.add_argument('--model', required=True)
    _add_descriptors(p, 'input')
    p.add_argument('--renormalize', type=parse_bool, default=True)
    p.add_argument('--whiten', type=parse_bool, default=False)
    _add_output(p)

    proj = group('proj', 'Discriminative projection learning.')
    leaves['proj fit'] = p = _leaf(proj, 'fit', 'proj fit', cmd_proj_fit,
                                   common, ('input', 'input_ids', 'pairs'),
                                   'Learn a low-rank projection (NCW1).')
    defaults = TrainConfig(dim=1)
    _add_descriptors(p, 'input')
    p.add_argument('--pairs', required=True)
    p.add_argument('--dim', type=positive_int, required=True)
    p.add_argument('--tau-pos', type=float, default=defaults.tau_pos)
    p.add_argument('--tau-neg', type=float, default=defaults.tau_neg)
    p.add_argument('--eta0', type=float, default=defaults.eta0)
    p.add_argument('--decay', type=non_negative_float, default=defaults.decay)
    p.add_argument('--epochs', type=non_negative_int, default=defaults.epochs)
    p.add_argument('--batch-size', type=positive_int,
                   default=defaults.batch_size)
    p.add_argument('--max-backoffs',
                   type=non_negative_int,
                   default=defaults.max_backoffs)
    p.add_argument('--two-stage-min-dim', type=positive_int,
                   default=defaults.two_stage_min_dim)
    p.add_argument('--pre-pca-dim', type=positive_int,
                   default=defaults.pre_pca_dim)
    p.add_argument('--sample-cap', type=positive_int,
                   default=defaults.sample_cap)
    p.add_argument('--normalize', type=parse_bool, default=False,
                   help='L2-normalize the training codes first.')
    _add_output(p, with_ids=False)

    leaves['proj apply'] = p = _leaf(
        proj, 'apply', 'proj apply', cmd_proj_apply, common,
        ('model', 'input', 'input_ids'),
        'Project descriptors with a learned projection.')
    p.add_argument('--model', required=True)
    _add_descriptors(p, 'input')
    p.add_argument('--renormalize', type=parse_bool, default=True)
    _add_output(p)

    pairs = group('pairs', 'Training pair mining.')
    leaves['pairs mine'] = p = _leaf(
        pairs, 'mine', 'pairs mine', cmd_pairs_mine, common,
        ('graph', 'classes'),
        'Mine non-adjacent pairs with a common neighbour.')
    p.add_argument('--graph', required=True, help='Edge list TSV.')
    p.add_argument('--classes',
                   help='<id>\\t<class> TSV; enables negative sampling.')
    p.add_argument('--budget', type=positive_int, default=DEFAULT_BUDGET)
    p.add_argument('--num-negatives', type=non_negative_int,
                   help='Defaults to the number of positives.')
    p.add_argument('--greedy', type=parse_bool, default=True,
                   help='False writes every candidate pair.')
    _add_output(p, with_ids=False)

    leaves['pairs subset'] = p = _leaf(
        pairs, 'subset', 'pairs subset', cmd_pairs_subset, common,
        ('pairs', ), 'Greedy subset where every id occurs at most once.')
    p.add_argument('--pairs', required=True)
    p.add_argument('--budget', type=positive_int, default=DEFAULT_BUDGET)
    _add_output(p, with_ids=False)

    leaves['pairs negatives'] = p = _leaf(
        pairs, 'negatives', 'pairs negatives', cmd_pairs_negatives, common,
        ('classes', 'pairs'), 'Sample cross-class negative pairs.')
    p.add_argument('--classes', required=True)
    p.add_argument('--pairs', help='Positives to keep alongside negatives.')
    p.add_argument('--count', type=non_negative_int,
                   help='Defaults to the number of positives in --pairs.')
    _add_output(p, with_ids=False)

    index = group('index', 'Exact nearest neighbour search.')
    leaves['index query'] = p = _leaf(
        index, 'query', 'index query', cmd_index_query, common,
        ('database', 'database_ids', 'queries', 'queries_ids'),
        'Rank the database for every query.')
    _add_descriptors(p, 'database')
    _add_descriptors(p, 'queries')
    p.add_argument('--k', type=positive_int, default=10)
    p.add_argument('--exclude-self', type=parse_bool, default=False)
    p.add_argument('--normalize', type=parse_bool, default=True)
    p.add_argument('--block-size', type=positive_int,
                   default=DEFAULT_BLOCK_SIZE)
    p.add_argument('--out', help='Ranked lists TSV; stdout if unset.')

    evaluation = group('eval', 'Benchmark evaluation.')
    leaves['eval oxford'] = p = _leaf(
        evaluation, 'oxford', 'eval oxford', cmd_eval_oxford, common,
        ('database', 'database_ids', 'queries', 'queries_ids', 'gt',
         'distractors', 'distractors_ids'),
        'Oxford Buildings (105K with --distractors) mAP.')
    _add_descriptors(p, 'database')
    _add_descriptors(p, 'queries')
    _add_descriptors(p, 'distractors', required=False)
    p.add_argument('--gt', required=True,
                   help='<query>\\t<good|ok|junk>\\t<item> TSV.')
    p.add_argument('--ok-policy', choices=OK_POLICIES, default='positive')
    p.add_argument('--ap-variant', choices=AP_VARIANTS,
                   default='rectangular')
    _add_eval_output(p)

    leaves['eval holidays'] = p = _leaf(
        evaluation, 'holidays', 'eval holidays', cmd_eval_holidays, common,
        ('database', 'database_ids', 'gt'),
        'INRIA Holidays mAP, query left out of its ranking.')
    _add_descriptors(p, 'database')
    p.add_argument('--gt', required=True, help='<item>\\t<group> TSV.')
    p.add_argument('--query-rule', choices=QUERY_RULES, default='auto')
    p.add_argument('--ap-variant', choices=AP_VARIANTS,
                   default='rectangular')
    _add_eval_output(p)

    leaves['eval ukb'] = p = _leaf(
        evaluation, 'ukb', 'eval ukb', cmd_eval_ukb, common,
        ('database', 'database_ids', 'gt'),
        'UKB score: same-object images in the top 4.')
    _add_descriptors(p, 'database')
    p.add_argument('--gt', required=True, help='<item>\\t<group> TSV.')
    _add_eval_output(p)

    synth = group('synth', 'Synthetic benchmarks.')
    leaves['synth gen'] = p = _leaf(
        synth, 'gen', 'synth gen', cmd_synth_gen, common, (),
        'Write <out>.ncd, <out>.ids and <out>.gt.tsv.')
    p.add_argument('--groups', type=positive_int, required=True)
    p.add_argument('--size', type=positive_int, required=True)
    p.add_argument('--dim', type=positive_int, required=True)
    p.add_argument('--sigma', type=non_negative_float, default=0.0)
    p.add_argument('--nuisance-dim', type=non_negative_int, default=0)
    p.add_argument('--nuisance-amp', type=non_negative_float, default=0.0)
    p.add_argument('--intrinsic-dim', type=positive_int)
    p.add_argument('--pairs', type=parse_bool, default=False,
                   help='Also write <out>.pairs.tsv for projection learning.')
    p.add_argument('--out', required=True, help='Output prefix.')

    leaves['convert'] = p = _leaf(commands, 'convert', 'convert', cmd_convert,
                                  common, ('input', 'input_ids'),
                                  'Convert between CSV and NCD.')
    _add_descriptors(p, 'input', help='.csv (id,v1,...,vd) or .ncd')
    p.add_argument('--layer-tag')
    _add_output(p)

    leaves['run'] = p = _leaf(commands, 'run', 'run', cmd_run, common,
                              ('manifest', ), 'Run a pipeline manifest.')
    p.add_argument('manifest')
    return parser, leaves


def _check_input_paths(args):
    for name in args.input_paths:
        value = getattr(args, name, None)
        if value is not None and not Path(value).exists():
            raise MissingPathError('--' + name.replace('_', '-'), value)


def _logging_level(argv):
    pre_parser = argparse.ArgumentParser(add_help=False)
    pre_parser.add_argument('--verbose', action='store_true')
    pre_parser.add_argument('--quiet', action='store_true')
    pre_parser.add_argument('--log-file')
    known, _ = pre_parser.parse_known_args(argv)
    if known.verbose:
        return logging.DEBUG, known.log_file
    if known.quiet:
        return logging.WARNING, known.log_file
    return logging.INFO, known.log_file


def parse_args(argv):
    parser, leaves = build_parser()
    pre_parser = argparse.ArgumentParser(add_help=False)
    pre_parser.add_argument('--config')
    known, _ = pre_parser.parse_known_args(argv)
    if known.config:
        if not Path(known.config).exists():
            raise MissingPathError('--config', known.config)
        config = load_config(known.config)
        for command, leaf in leaves.items():
            apply_config(leaf, command, config)
    return parser.parse_args(argv)


def dispatch(argv=None, configure_logging=True):
    """Run one subcommand and return its exit code."""
    if argv is None:
        argv = sys.argv[1:]
    argv = [str(x) for x in argv]
    if configure_logging:
        level, log_file = _logging_level(argv)
        setup_logging(log_file, level)
    try:
        args = parse_args(argv)
        logging.debug('Args:\n%s', pprint.pformat(vars(args)))
        _check_input_paths(args)
        exit_code = args.run(args)
    except NcrError as e:
        logging.error('%s: %s', type(e).__name__, e)
        return e.exit_code
    except SystemExit as e:
        # --help
        return e.code if isinstance(e.code, int) else 0
    return exit_code or 0


def main():
    sys.exit(dispatch())


if __name__ == '__main__':
    main()
