"""Optimal retirement decumulation: dynamic programming, Monte Carlo and bootstrap."""

from ._decum import *  # noqa: F401,F403
from ._decum import __doc__  # noqa: F401

__version__ = "0.1.0"
