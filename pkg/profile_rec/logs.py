from __future__ import annotations

import logging
import os
import sys

LOG_LEVEL_ENV = "PROFILE_REC_LOG_LEVEL"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure(level: str | None = None) -> None:
    resolved = (level or os.environ.get(LOG_LEVEL_ENV) or "INFO").upper()
    root = logging.getLogger("profile_rec")
    root.handlers.clear()
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(resolved)


def progress_enabled(quiet: bool = False) -> bool:
    return not quiet and sys.stderr.isatty()
