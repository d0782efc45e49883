"""
Logging setup shared by the solver, the command line and the service.

Every process writes one log file per run, named after what the run does
(``mdrsp_solve-bays29_2026-10-18_09_30.log``), into ``MDRSP_LOG_DIR``.
Size rotation is off unless ``MDRSP_LOG_MAX_BYTES`` is set.
"""

import math
import os
import re
from datetime import datetime, timezone
from functools import wraps
from logging import Formatter, Logger, StreamHandler, getLogger
from logging.handlers import TimedRotatingFileHandler
from typing import Mapping

import numpy as np

LOGGERS = {}
MAIN_LOG_FILE = None
ROOT_LOGGER_NAME = 'mdrsp'
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


class TimedAndSizedRotatingFileHandler(TimedRotatingFileHandler):
    """
    Handler that rotates based on both time and file size.

    Long branch-and-cut runs log one progress line per node batch, so a
    size cap keeps a single bench session from producing one huge file.
    """
    def __init__(self, filename, when='midnight', interval=1, backupCount=0,
                 maxBytes=0, encoding=None, delay=False, utc=False):
        super().__init__(filename, when, interval, backupCount, encoding, delay, utc)
        self.maxBytes = maxBytes

    def shouldRollover(self, record):
        """
        Return True if either the time-based or the size-based rollover is due.
        """
        if super().shouldRollover(record):
            return True

        if self.maxBytes > 0:
            msg = f"{self.format(record)}\n"
            self.stream.seek(0, 2)
            if self.stream.tell() + len(msg) >= self.maxBytes:
                return True

        return False


def default_log_directory() -> str:
    """the log directory, ``MDRSP_LOG_DIR`` if set, otherwise ``log``"""
    return os.environ.get('MDRSP_LOG_DIR', 'log')


def _env_int(name: str) -> int:
    value = os.environ.get(name, '').strip()
    if not value:
        return 0
    if not value.isdigit():
        raise ValueError(f'{name} must be a nonnegative integer, got {value!r}')
    return int(value)


def run_log_name(run_label: str | None = None, when: datetime | None = None) -> str:
    """
    file name of a run's log: ``mdrsp[_<label>]_<UTC minute>.log``

    every run of characters other than ASCII letters and digits in the label
    becomes one dash, so instance names taken from paths are safe to use
    """
    stamp = (when or datetime.now(timezone.utc)).strftime('%Y-%m-%d_%H_%M')
    label = re.sub(r'[^A-Za-z0-9]+', '-', run_label or '').strip('-')
    return f'{ROOT_LOGGER_NAME}_{label}_{stamp}.log' if label else f'{ROOT_LOGGER_NAME}_{stamp}.log'


def setup_logger(name: str = ROOT_LOGGER_NAME,
                 directory_path: str | None = None,
                 stream_log_level: str = 'INFO',
                 run_label: str | None = None,
                 max_file_size: int | None = None,
                 max_backup_files: int | None = None) -> Logger:
    """
    this function will setup a logger and return it for use
    if the logger already exists, it will return the existing logger

    library modules never call this; they log through children of the
    ``mdrsp`` logger, which propagate into whatever handlers the command line
    or the service installed here.  All loggers set up by one process share
    the file of the first call.

    :param name: the name of the logger, defaults to 'mdrsp'
    :type name: str
    :param directory_path: the directory for the log files, defaults to ``default_log_directory()``
    :type directory_path: str | None
    :param stream_log_level: the log level for the stream handler, defaults to 'INFO'
    :type stream_log_level: str
    :param run_label: what the run does, e.g. ``solve-bays29``; it becomes part of the file name
    :type run_label: str | None
    :param max_file_size: bytes before a size rollover, defaults to ``MDRSP_LOG_MAX_BYTES`` (0 = never)
    :type max_file_size: int | None
    :param max_backup_files: rotated files to keep, defaults to ``MDRSP_LOG_BACKUPS`` (0 = all)
    :type max_backup_files: int | None
    :return: the logger
    :rtype: Logger
    :raises ValueError: if a size or backup environment variable is not a nonnegative integer
    """
    global MAIN_LOG_FILE

    if name in LOGGERS:
        return LOGGERS[name]

    if directory_path is None:
        directory_path = default_log_directory()
    if max_file_size is None:
        max_file_size = _env_int('MDRSP_LOG_MAX_BYTES')
    if max_backup_files is None:
        max_backup_files = _env_int('MDRSP_LOG_BACKUPS')

    if MAIN_LOG_FILE is None:
        os.makedirs(directory_path, exist_ok=True)
        MAIN_LOG_FILE = os.path.join(directory_path, run_log_name(run_label))

    new_logger = getLogger(name)
    new_logger.setLevel('DEBUG')

    LOGGERS[name] = new_logger
    formatter = Formatter(LOG_FORMAT)

    file_handler = TimedAndSizedRotatingFileHandler(MAIN_LOG_FILE,
                                                    maxBytes=max_file_size,
                                                    backupCount=max_backup_files)
    file_handler.name = 'file_handler'
    file_handler.setLevel('DEBUG')
    file_handler.setFormatter(formatter)
    new_logger.addHandler(file_handler)

    stream_handler = StreamHandler()
    stream_handler.name = 'stream_handler'
    stream_handler.setLevel(stream_log_level)
    stream_handler.setFormatter(formatter)
    new_logger.addHandler(stream_handler)

    return new_logger


def set_verbosity(logger: Logger, verbose: bool) -> None:
    """
    switch a logger and all of its handlers between DEBUG and INFO

    :param logger: the logger returned by ``setup_logger``
    :type logger: Logger
    :param verbose: True for DEBUG, False for INFO
    :type verbose: bool
    """
    level = 'DEBUG' if verbose else 'INFO'
    logger.setLevel(level)
    for handler in logger.handlers:
        handler.setLevel(level)
    logger.debug('Verbose logging enabled.' if verbose else 'Verbose logging disabled.')


def log_file_path(logger: Logger) -> str | None:
    """the base file name of the logger's file handler, None if it has none"""
    for handler in logger.handlers:
        if handler.name == 'file_handler':
            return handler.baseFilename
    return None


def _bound(value: float) -> str:
    return f'{value:.6f}' if math.isfinite(value) else 'none'


def format_progress(node_id: int, lb: float, ub: float, gap: float, cut_counts: Mapping[str, int]) -> str:
    """
    one progress line of the search:
    ``node=<id> lb=<lb> ub=<ub> gap=<pct>% cuts=<count/count/...>``

    bounds that do not exist yet print as ``none``; ``gap`` is a fraction
    """
    cuts = '/'.join(str(count) for count in cut_counts.values())
    pct = f'{100 * gap:.4f}%' if math.isfinite(gap) else 'none'
    return f'node={node_id} lb={_bound(lb)} ub={_bound(ub)} gap={pct} cuts={cuts}'


def _brief(value) -> str:
    """arguments as they appear in entry lines: arrays by shape, the rest by repr"""
    if isinstance(value, np.ndarray):
        return f'<{value.dtype} array {value.shape}>'
    return repr(value)


def enter_exit_logger(logger):
    """
    this function will log the entry and exit of a function

    :param logger: the logger name to use
    :type logger: str
    :return: the decorator
    :rtype: function
    """
    logger = getLogger(logger)

    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):

            if len(args) > 0 and hasattr(args[0].__class__, func.__name__):
                print_args = ('<self>',) + tuple(_brief(arg) for arg in args[1:])
            else:
                print_args = tuple(_brief(arg) for arg in args)
            print_kwargs = {key: _brief(value) for key, value in kwargs.items()}

            logger.debug(f'Entering {func.__qualname__}, args: ({", ".join(print_args)}), kwargs={print_kwargs}')
            result = func(*args, **kwargs)
            logger.debug(f'Exiting {func.__qualname__}')
            return result
        return wrapper
    return decorator


class LoggerWriter:
    """
    File-like wrapper around a logger; the service routes stdout/stderr through it.
    """
    def __init__(self, logger, level):
        self.logger = logger
        self.level = level

    def write(self, message):
        """
        Write a message to the logger, dropping blank lines.

        :param message: the message to log
        :type message: str
        """
        message = message.rstrip()
        if message:
            self.logger.log(self.level, message)

    def flush(self):
        """no-op, present for file-like compatibility"""
