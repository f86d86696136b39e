"""Package logger.

The level defaults to INFO and can be changed with GRAN_LOG_LEVEL, for
example GRAN_LOG_LEVEL=WARNING to keep training and evaluation quiet.
"""

import logging
import os

FORMAT = "[%(asctime)-15s %(filename)s:%(lineno)d %(funcName)s] %(message)s"
LEVEL_ENV = "GRAN_LOG_LEVEL"

logging.basicConfig(format=FORMAT)
logger = logging.getLogger("gran")


def set_level(level: str) -> None:
    """Set the package log level by name."""
    value = logging.getLevelName(level.upper())
    if not isinstance(value, int):
        raise ValueError("unknown log level {}".format(level))
    logger.setLevel(value)


set_level(os.environ.get(LEVEL_ENV, "INFO"))
