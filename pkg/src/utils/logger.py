"""
Logging setup for the hypcross toolkit
structlog on top of the stdlib logging handlers, console or JSON output
"""

import logging
import sys
from pathlib import Path

import structlog


def setup_logging(config=None, level=None):
    """
    Configure structlog and the stdlib root handlers.

    Args:
        config: Config instance; LOG_LEVEL, LOG_FORMAT, LOG_TO_FILE and LOGS_PATH are read from it
        level: Optional level name overriding the configured one
    """
    level_name = (level or (config.LOG_LEVEL if config is not None else 'WARNING')).upper()
    log_format = config.LOG_FORMAT if config is not None else 'console'
    numeric_level = getattr(logging, level_name, logging.INFO)

    handlers = [logging.StreamHandler(sys.stderr)]
    if config is not None and config.LOG_TO_FILE:
        logs_path = Path(config.LOGS_PATH)
        logs_path.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(logs_path / 'hypcross.log', encoding='utf-8'))

    logging.basicConfig(format='%(message)s', level=numeric_level, handlers=handlers, force=True)

    renderer = (
        structlog.processors.JSONRenderer()
        if log_format == 'json'
        else structlog.dev.ConsoleRenderer(colors=False)
    )
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.processors.TimeStamper(fmt='iso'),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            renderer,
        ],
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=False,
    )


def get_logger(name: str):
    """Get a structlog logger bound to a module name"""
    return structlog.get_logger(name)
