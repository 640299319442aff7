import logging

MESSAGE_FORMAT = "%(message)s"
DEBUG_FORMAT = "%(relativeCreated)8.0fms %(levelname)-7s %(module)s: %(message)s"

logger = logging.getLogger("forcedist")
_handler = logging.StreamHandler()
_handler.setFormatter(logging.Formatter(MESSAGE_FORMAT))
logger.addHandler(_handler)
logger.propagate = False


def configure_logging(verbose_count: int, quiet: bool) -> None:
    if quiet:
        level, fmt = logging.WARNING, MESSAGE_FORMAT
    elif verbose_count >= 2:
        # optimizer starts and flow levels are traced per module with elapsed time
        level, fmt = logging.DEBUG, DEBUG_FORMAT
    else:
        level, fmt = logging.INFO, MESSAGE_FORMAT

    logger.setLevel(level)
    _handler.setFormatter(logging.Formatter(fmt))
