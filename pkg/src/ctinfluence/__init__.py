"""Exact influence evaluation and maximization for continuous-time diffusion networks.

Edges carry exponential transmission rates. The probability that a node is
infected by time ``T`` is the absorption-time CDF of a small Markov chain
over "disabled" node sets, so the influence ``sigma(A; T)`` is computed
exactly rather than sampled.
"""
from importlib.resources import files

from .closure import DEFAULT_MAX_STATES, StateBudgetExceeded, StateSpace, blocked_set, enumerate_states, is_closed
from .ctmc import DEFAULT_TOL, Generator, absorption_cdf, build_generator, cut_edges, dense_absorption_cdf, dense_expm
from .estimators import InfluenceEstimator, InfluenceMaximizer
from .influence import EvalOptions, EvaluationError, InfluenceEvaluator, InfluenceReport, infection_probability, influence
from .network import (
    KRONECKER_CORE_PERIPHERY,
    KRONECKER_HIERARCHICAL,
    KRONECKER_RANDOM,
    Network,
    NetworkError,
    NetworkFormatError,
    RateDistribution,
    as_mask,
    assign_rates,
    drop_isolated,
    generate_forest_fire,
    generate_kronecker,
    kronecker_seed_for_density,
    load_network,
    members,
    save_network,
    to_mask,
)
from .optimize import GreedyTrace, Pick, baseline_select, exhaustive, greedy, online_bound
from .simulate import CascadeSample, MCEstimate, mc_influence, sample_cascade
from .validation import check_network, check_source_set

__version__ = "0.1.0"


def fixture_path(name: str):
    """Path of a shipped fixture network: ``chain``, ``toy``, ``diamond`` or ``star``."""
    return files(__package__) / "fixtures" / f"{name}.tsv"


__all__ = [name for name in dir() if not name.startswith("_") and name != "files"]
