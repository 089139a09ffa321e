"""Set-of-Mark dataset toolkit: tagging, listing generation, parsing and scoring."""

from ._core import *  # noqa: F401,F403
from ._core import ConfigError, DataError, IoError, SomError

__all__ = [name for name in dir() if not name.startswith("_")]
