"""
Logging setup shared by the CLI and the helper scripts
"""

import logging
import sys

from pythonjsonlogger import jsonlogger

TEXT_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
JSON_FORMAT = '%(asctime)s %(name)s %(levelname)s %(message)s'


def setup_logging(level: str = 'INFO', fmt: str = 'text') -> logging.Logger:
    """
    Configure the root logger once

    Args:
        level: Log level name (DEBUG, INFO, ...)
        fmt: 'text' for human-readable lines, 'json' for one JSON object per record

    Returns:
        The configured root logger
    """
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)

    handler = logging.StreamHandler(sys.stderr)
    if fmt == 'json':
        handler.setFormatter(jsonlogger.JsonFormatter(JSON_FORMAT))
    else:
        handler.setFormatter(logging.Formatter(TEXT_FORMAT))

    root.addHandler(handler)
    root.setLevel(getattr(logging, str(level).upper(), logging.INFO))
    return root
