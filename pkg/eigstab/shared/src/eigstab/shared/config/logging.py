"""Logging configuration module.

Configures the level of the root logger and all of its handlers, installing a
stream handler with the project's line format when none exists yet.
"""

import logging

from eigstab.shared.config.config_base import LogLevel

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s %(message)s"


def configure_logging(level: LogLevel) -> None:
    """Configure logging level for all handlers.

    Args:
        level: Logging level to set for all handlers and root logger.
    """
    root = logging.getLogger()
    if root.handlers:
        # reconfigure existing handlers
        for h in root.handlers:
            h.setLevel(level)
        root.setLevel(level)
    else:
        logging.basicConfig(level=level, format=LOG_FORMAT)
