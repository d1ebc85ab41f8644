"""Probabilistic forwarding of MDS-coded packets: simulation, exact small-graph
oracle and tree analysis."""

from codedgossip.engine import CodingConfig, ProtocolParams, TrialOutcome, run_trial, run_trial_coupled
from codedgossip.estimator import Estimate, InfeasibleError, SweepPoint, estimate, min_forwarding_probability, sweep_redundancy
from codedgossip.graph import Graph, GridSpec, RggSpec, TreeSpec, gen_grid, gen_rgg, gen_tree, largest_component

__all__ = [
    "CodingConfig",
    "Estimate",
    "Graph",
    "GridSpec",
    "InfeasibleError",
    "ProtocolParams",
    "RggSpec",
    "SweepPoint",
    "TreeSpec",
    "TrialOutcome",
    "estimate",
    "gen_grid",
    "gen_rgg",
    "gen_tree",
    "largest_component",
    "min_forwarding_probability",
    "run_trial",
    "run_trial_coupled",
    "sweep_redundancy",
]
