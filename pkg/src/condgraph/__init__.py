"""Uniform MCMC sampling of graphs and contingency tables with fixed degree
sequences (or margins) and a set of pairs held fixed."""

__version__ = "0.1.0"

from .closure import compute_closure, fixed_status
from .diagnostics import ChainConfig, ChainRun, ess, mixing_rate, p_value, run_chain, run_chains
from .ds import DsSampler
from .errors import (CondGraphError, ConfigError, ConvergenceError, DomainError,
                     FrozenStateError, InfeasibleError, InvariantViolation, ParseError)
from .graph import DegreeSequence, FixedSet, Graph, table_instance
from .io import parse_instance
from .oracle import state_space
from .stats import chi_squared, compartmentalization, ipfp, likelihood_ratio, make_statistic
from .ugs import UgsSampler
from .wgs import WgsSampler

__all__ = [
    "ChainConfig", "ChainRun", "CondGraphError", "ConfigError", "ConvergenceError",
    "DegreeSequence", "DomainError", "DsSampler", "FixedSet", "FrozenStateError", "Graph",
    "InfeasibleError", "InvariantViolation", "ParseError", "UgsSampler", "WgsSampler",
    "chi_squared", "compartmentalization", "compute_closure", "ess", "fixed_status", "ipfp",
    "likelihood_ratio", "make_statistic", "mixing_rate", "p_value", "parse_instance",
    "run_chain", "run_chains", "state_space", "table_instance",
]
