"""Hitting and return time statistics of rare events for interval maps."""

from . import dynsys, gmtheory, inducing, limits, processes, rare_events, stats
from .dynsys import doubling, gauss, intermittent, pwl_markov
from .empirical import EmpiricalLaw
from .intervals import Interval, IntervalUnion
from .rng import SeededRng

__all__ = [
    "dynsys", "gmtheory", "inducing", "limits", "processes", "rare_events", "stats",
    "doubling", "gauss", "intermittent", "pwl_markov", "EmpiricalLaw", "Interval", "IntervalUnion", "SeededRng",
]
__version__ = "0.1.0"
