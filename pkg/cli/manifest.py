"""Run a pipeline manifest: one subcommand per line, executed in order.

Lines are split with shell quoting rules; blank lines and lines starting
with '#' are skipped, and a leading `ncr` / `ncr.py` token is optional.
Execution stops at the first step with a non-zero exit code, which becomes
the manifest's exit code.
"""

import logging
import shlex
import time

from utils.errors import ParseError, UsageError
from utils.io import read_lines

PROGRAM_NAMES = ('ncr', 'ncr.py', './ncr.py')


def msg(message):
    logging.info(f'\n\n###\n{message}\n###\n')


def read_manifest(path):
    """List of (line_number, argv) steps."""
    steps = []
    for line_number, line in enumerate(read_lines(path), 1):
        line = line.strip()
        if not line or line.startswith('#'):
            continue
        try:
            argv = shlex.split(line)
        except ValueError as e:
            raise ParseError(path, line_number, str(e)) from e
        if argv[0] in PROGRAM_NAMES:
            argv = argv[1:]
        if not argv:
            raise ParseError(path, line_number, 'no subcommand')
        if argv[0] == 'run':
            raise UsageError('%s:%s: manifests cannot run other manifests' %
                             (path, line_number))
        steps.append((line_number, argv))
    return steps


def run_manifest(path, run_step):
    """
    Args:
        path (str or Path): Manifest file.
        run_step (callable): Maps an argv list to an exit code.

    Returns:
        exit_code (int): 0, or the exit code of the first failing step.
    """
    steps = read_manifest(path)
    if not steps:
        logging.info('Manifest %s has no steps.', path)
        return 0
    total_start = time.time()
    for i, (line_number, argv) in enumerate(steps, 1):
        msg('Step %s/%s (line %s): %s' %
            (i, len(steps), line_number, ' '.join(shlex.quote(x)
                                                  for x in argv)))
        start = time.time()
        exit_code = run_step(argv)
        logging.info('Step %s/%s finished in %.2fs with exit code %s', i,
                     len(steps), time.time() - start, exit_code)
        if exit_code != 0:
            logging.error('Stopping manifest at line %s; %s step(s) skipped.',
                          line_number, len(steps) - i)
            return exit_code
    logging.info('Manifest finished %s steps in %.2fs', len(steps),
                 time.time() - total_start)
    return 0
