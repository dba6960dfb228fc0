import json
import logging
import logging.handlers
import sys
import time
import traceback
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Optional, Union

# record attributes the batch service attaches; absent on plain records
CONTEXT_FIELDS = ('page', 'stage', 'elapsed')

NOISY_LIBRARIES = ('PIL', 'matplotlib', 'numba')


class PageFormatter(logging.Formatter):
    """Per-level text layout with the page being processed, when known."""

    def __init__(self):
        super().__init__()
        self.formatters = {
            logging.DEBUG: logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s'),
            logging.INFO: logging.Formatter('%(asctime)s - %(levelname)s - %(message)s'),
            logging.WARNING: logging.Formatter('%(asctime)s - %(levelname)s - %(message)s - %(pathname)s:%(lineno)d'),
            logging.ERROR: logging.Formatter('%(asctime)s - %(levelname)s - %(message)s\n'
                                             'Path: %(pathname)s:%(lineno)d\nThread: %(threadName)s'),
            logging.CRITICAL: logging.Formatter('%(asctime)s - %(levelname)s - %(message)s\n'
                                                'Path: %(pathname)s:%(lineno)d\nThread: %(threadName)s\n'
                                                'Process: %(process)d'),
        }

    def format(self, record):
        formatter = self.formatters.get(record.levelno, self.formatters[logging.DEBUG])
        if record.exc_info:
            record.exc_text = ''.join(traceback.format_exception(*record.exc_info))
        text = formatter.format(record)
        page = getattr(record, 'page', None)
        return f"[{page}] {text}" if page else text


class JsonLineFormatter(logging.Formatter):
    """One JSON object per record, carrying page and stage context as fields."""

    def format(self, record):
        entry = {
            'timestamp': self.formatTime(record),
            'level': record.levelname,
            'logger': record.name,
            'message': record.getMessage(),
            'line': record.lineno,
            'thread': record.threadName,
        }
        for name in CONTEXT_FIELDS:
            if hasattr(record, name):
                entry[name] = getattr(record, name)
        if record.exc_info:
            entry['exception'] = ''.join(traceback.format_exception(*record.exc_info))
        return json.dumps(entry, default=str)


class PageAdapter(logging.LoggerAdapter):
    """Adds the adapter context to each record without dropping per-call ``extra``."""

    def process(self, msg, kwargs):
        kwargs['extra'] = {**self.extra, **kwargs.get('extra', {})}
        return msg, kwargs


def setup_logging(
    log_path: Optional[Path],
    level: int = logging.INFO,
    max_bytes: int = 5_242_880,  # 5MB
    backup_count: int = 5,
    json_format: bool = False
) -> None:
    """Install a stderr handler and, with ``log_path``, a rotating file handler.

    Commands print their result paths on stdout, so nothing logs there.
    """
    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    root_logger.handlers.clear()

    formatter = JsonLineFormatter() if json_format else PageFormatter()

    if log_path is not None:
        log_path.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.handlers.RotatingFileHandler(
            log_path,
            maxBytes=max_bytes,
            backupCount=backup_count,
            encoding='utf-8'
        )
        file_handler.setFormatter(formatter)
        root_logger.addHandler(file_handler)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    for lib in NOISY_LIBRARIES:
        logging.getLogger(lib).setLevel(logging.WARNING)


def get_logger(name: str, context: Optional[dict] = None) -> Union[logging.Logger, logging.LoggerAdapter]:
    """Module logger, wrapped in a :class:`PageAdapter` when ``context`` is given."""
    logger = logging.getLogger(name)
    if context:
        return PageAdapter(logger, context)
    return logger


@contextmanager
def log_timing(logger, stage: str, timings: Optional[Dict[str, float]] = None):
    """Log the wall time of a pipeline stage and record it in ``timings``."""
    start = time.perf_counter()
    try:
        yield
    finally:
        elapsed = time.perf_counter() - start
        if timings is not None:
            timings[stage] = elapsed
        logger.debug(f"{stage} took {elapsed:.3f}s", extra={'stage': stage, 'elapsed': round(elapsed, 6)})
