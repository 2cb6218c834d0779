import logging
import sys

_HANDLER_NAME = "fedbandit-stdout"


def setup_logging(level: str = "INFO") -> logging.Logger:
    log_level = getattr(logging, str(level).upper(), logging.INFO)
    fmt = "%(asctime)s | %(levelname)-5s | %(name)-20s | %(message)s"
    datefmt = "%Y-%m-%d %H:%M:%S"

    root = logging.getLogger()
    root.setLevel(log_level)
    # idempotent
    if not any(h.get_name() == _HANDLER_NAME for h in root.handlers):
        handler = logging.StreamHandler(sys.stdout)
        handler.set_name(_HANDLER_NAME)
        handler.setFormatter(logging.Formatter(fmt, datefmt))
        root.addHandler(handler)
    return root
