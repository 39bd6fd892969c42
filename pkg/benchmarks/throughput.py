"""Measure exact kNN query throughput on random unit descriptors.

Usage:
    python benchmarks/throughput.py --queries 1000 --database 100000 --dim 128
"""

import argparse
import logging
import pprint
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from retrieval.index import DEFAULT_BLOCK_SIZE, Index  # noqa: E402
from utils.descriptors import DescriptorSet  # noqa: E402
from utils.distance import normalize_rows  # noqa: E402
from utils.log import setup_logging  # noqa: E402
from utils.misc import positive_int  # noqa: E402


def random_set(num_rows, dim, rng, prefix):
    data = normalize_rows(rng.standard_normal((num_rows, dim)))
    return DescriptorSet(['%s%07d' % (prefix, i) for i in range(num_rows)],
                         data)


def main():
    parser = argparse.ArgumentParser(
        description=__doc__.split('\n')[0],
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    parser.add_argument('--queries', type=positive_int, default=1000)
    parser.add_argument('--database', type=positive_int, default=100000)
    parser.add_argument('--dim', type=positive_int, default=128)
    parser.add_argument('--k', type=positive_int, default=10)
    parser.add_argument('--threads', type=positive_int, nargs='+',
                        default=[1, 4])
    parser.add_argument('--block-size', type=positive_int,
                        default=DEFAULT_BLOCK_SIZE)
    parser.add_argument('--seed', type=int, default=0)
    args = parser.parse_args()

    setup_logging()
    logging.info('Args:\n%s', pprint.pformat(vars(args)))

    rng = np.random.default_rng(args.seed)
    index = Index(random_set(args.database, args.dim, rng, 'd'))
    queries = random_set(args.queries, args.dim, rng, 'q')

    reference = None
    for threads in args.threads:
        start = time.perf_counter()
        ranked_lists = index.batch_query(queries, args.k, threads=threads,
                                         block_size=args.block_size)
        elapsed = time.perf_counter() - start
        if reference is None:
            reference = ranked_lists
        elif ranked_lists != reference:
            logging.error('Results with %s threads differ from %s threads!',
                          threads, args.threads[0])
        logging.info('threads=%s: %.2fs, %.1f queries/s', threads, elapsed,
                     args.queries / elapsed)


if __name__ == '__main__':
    main()
