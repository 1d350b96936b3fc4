# utils/log.py

import logging
import os

from dotenv import load_dotenv

_configured = False


def configure(level: str | None = None) -> None:
    """
    Console logging as "[component] message".

    Level comes from the argument, else CAVITYBELL_LOG_LEVEL (.env aware), else INFO.
    """
    global _configured
    load_dotenv()
    level = (level or os.getenv("CAVITYBELL_LOG_LEVEL") or "INFO").upper()

    root = logging.getLogger("cavitybell")
    if not _configured:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter("[%(name)s] %(message)s"))
        root.addHandler(handler)
        root.propagate = False
        _configured = True
    root.setLevel(level)


def get_logger(name: str) -> logging.Logger:
    if not _configured:
        configure()
    return logging.getLogger(f"cavitybell.{name}")
