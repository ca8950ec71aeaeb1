"""Stochastic multi-armed bandit simulator.

Implements sample-budgeted Thompson Sampling variants (model aggregation and
timestamp duelling), the classical randomized and KL-UCB baselines, theory
oracles for the accompanying regret bounds, and a reproducible experiment
harness with a CLI.
"""
from .core import (
    KERNELS_AVAILABLE,
    ArmState,
    BanditInstance,
    RewardModel,
    RunMetrics,
    checkpoint_grid,
    make_instance,
    run_episode,
)
from .distributions import RngStream
from .policies import (
    EpsilonTs,
    ExpTsPlus,
    KlUcbPlusPlus,
    TsMa,
    TsTd,
    VanillaTsBeta,
    VanillaTsGaussian,
    lower_bound_curve,
    make_policy,
    sample_budget,
)

__version__ = "0.1.0"

__all__ = [
    "KERNELS_AVAILABLE",
    "ArmState",
    "BanditInstance",
    "RewardModel",
    "RunMetrics",
    "RngStream",
    "checkpoint_grid",
    "make_instance",
    "run_episode",
    "EpsilonTs",
    "ExpTsPlus",
    "KlUcbPlusPlus",
    "TsMa",
    "TsTd",
    "VanillaTsBeta",
    "VanillaTsGaussian",
    "lower_bound_curve",
    "make_policy",
    "sample_budget",
    "__version__",
]
