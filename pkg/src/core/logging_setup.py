"""
Logging configuration

Console output goes through rich; an optional log file receives plain
timestamped records.
"""

import logging
from typing import Optional

from rich.console import Console
from rich.logging import RichHandler

from src.core.errors import ConfigError

LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")
LOG_FORMAT = "%(asctime)s %(levelname)-8s %(name)s: %(message)s"


def configure_logging(level: str = "INFO", log_file: Optional[str] = None,
                      console: Optional[Console] = None) -> logging.Logger:
    """
    Configure the root logger once per process

    Args:
        level: Level name (DEBUG, INFO, WARNING, ERROR)
        log_file: Optional file that also receives every record
        console: rich Console for the terminal handler (stderr by default)

    Raises:
        ConfigError: level is not one of LEVELS
    """
    if not isinstance(level, str) or level.upper() not in LEVELS:
        raise ConfigError(f"Unknown log level: {level} (expected one of {', '.join(LEVELS)})")
    numeric = logging.getLevelName(level.upper())

    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    root.setLevel(numeric)

    rich_handler = RichHandler(
        console=console or Console(stderr=True),
        show_path=False,
        rich_tracebacks=False,
    )
    rich_handler.setFormatter(logging.Formatter("%(message)s"))
    root.addHandler(rich_handler)

    if log_file:
        file_handler = logging.FileHandler(log_file, encoding='utf-8')
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root.addHandler(file_handler)

    return root
