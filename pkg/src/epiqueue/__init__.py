"""Count at first detection for epidemics, branching processes and M/G/1 queues with catastrophes."""
__version__ = "0.1.0"

from .analytic import (AnalyticSolution, ModelParams, NonConvergence, PMF, detection_size_param,
                       geometric_pmf, solve_pi)
from .lifetimes import Deterministic, Exponential, Gamma, LifetimeSpec, LogNormal, Uniform
from .replication import EventCaps

__all__ = [
    "AnalyticSolution", "ModelParams", "NonConvergence", "PMF", "detection_size_param",
    "geometric_pmf", "solve_pi", "Deterministic", "Exponential", "Gamma", "LifetimeSpec",
    "LogNormal", "Uniform", "EventCaps",
]
