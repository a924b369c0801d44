"""Bayesian stochastic block model workbench."""
from .model import (
    BlockSufficientStats,
    ClusterAssignment,
    TruthSpec,
    block_stats,
    blocked_distance,
    log_likelihood,
    normalized_sq_error,
    sample_adjacency,
    sample_truth,
    theta_from_assignment,
)
from .rates import RateSchedule, rate_schedule

__version__ = "0.1.0"
