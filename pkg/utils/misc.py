import argparse


def simple_table(rows):
    lengths = [
        max(len(row[i]) for row in rows) + 1 for i in range(len(rows[0]))
    ]
    row_format = ' '.join(('{:<%s}' % length) for length in lengths[:-1])
    row_format += ' {}'  # The last column can maintain its length.

    output = ''
    for i, row in enumerate(rows):
        if i > 0:
            output += '\n'
        output += row_format.format(*row)
    return output


def parse_bool(arg):
    """Parse string to boolean.
    Using type=bool in argparse does not do the right thing. E.g.
    '--renormalize False' will parse as True.

    Usage:
        parser.add_argument('--renormalize', type=parse_bool)
    """
    if isinstance(arg, bool):
        return arg
    if arg == 'True':
        return True
    elif arg == 'False':
        return False
    else:
        raise argparse.ArgumentTypeError("Expected 'True' or 'False'.")


def positive_int(arg):
    """argparse type for integers >= 1."""
    try:
        value = int(arg)
    except (TypeError, ValueError):
        raise argparse.ArgumentTypeError('Expected an integer, got %r' % arg)
    if value < 1:
        raise argparse.ArgumentTypeError('Expected an integer >= 1, got %s' %
                                         value)
    return value


def non_negative_float(arg):
    try:
        value = float(arg)
    except (TypeError, ValueError):
        raise argparse.ArgumentTypeError('Expected a number, got %r' % arg)
    if not value >= 0:
        raise argparse.ArgumentTypeError('Expected a number >= 0, got %s' %
                                         value)
    return value


def non_negative_int(arg):
    """argparse type for integers >= 0."""
    try:
        value = int(arg)
    except (TypeError, ValueError):
        raise argparse.ArgumentTypeError('Expected an integer, got %r' % arg)
    if value < 0:
        raise argparse.ArgumentTypeError('Expected an integer >= 0, got %s' %
                                         value)
    return value
