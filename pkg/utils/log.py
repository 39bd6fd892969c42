import logging
import sys
from datetime import datetime
from pathlib import Path

LOG_FORMAT = '%(asctime)s %(filename)s:%(lineno)4d: %(message)s'


def add_time_to_path(logging_filepath):
    logging_filepath = Path(logging_filepath)
    now = datetime.now().strftime('%b%d-%H-%M-%S')
    return logging_filepath.with_name(logging_filepath.stem + '_' + now +
                                      logging_filepath.suffix)


def setup_logging(logging_filepath=None, level=logging.INFO):
    """Setup root logger to log to stderr and, optionally, a file.

    Standard output is reserved for command results, so the console handler
    writes to stderr. If `logging_filepath` is given, a timestamp is added to
    it and a file logger that only logs to that file is also created; it can
    be retrieved with logging.getLogger(<timestamped path>).

    Args:
        logging_filepath (str or Path, optional): Path to log to.
        level (int): Root logging level.

    Returns:
        logging_filepath (str or None): Timestamped log path, if any.
    """
    stream_date_format = '%H:%M:%S'
    file_date_format = '%m/%d %H:%M:%S'

    # Clear any previous changes to logging.
    logging.root.handlers = []
    logging.root.setLevel(level)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(
        logging.Formatter(LOG_FORMAT, datefmt=stream_date_format))
    logging.root.addHandler(console_handler)

    if logging_filepath is None:
        return None

    logging_filepath = str(add_time_to_path(logging_filepath))
    file_handler = logging.FileHandler(logging_filepath)
    file_handler.setFormatter(
        logging.Formatter(LOG_FORMAT, datefmt=file_date_format))
    logging.root.addHandler(file_handler)

    file_logger = logging.getLogger(logging_filepath)
    file_logger.addHandler(file_handler)
    file_logger.propagate = False

    logging.info('Writing log file to %s', logging_filepath)
    return logging_filepath
