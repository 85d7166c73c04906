"""Risk-aware assortment selection for multinomial-logit bandits.

The package evaluates risk criteria on discrete reward distributions, finds
risk-optimal assortments, and simulates optimistic (UCB) and Thompson-sampling
learners against an MNL customer-choice environment.
"""

from .agents import ALGORITHMS, Agent, AgentState, ProductStats, make_agent
from .distribution import (
    InvalidAssortment,
    InvalidDistribution,
    InvalidParameter,
    RewardDistribution,
    cdf_at,
    from_assortment,
    mean,
    mixture,
    moment,
    variance,
)
from .env import Environment, EpisodeResult, Instance, InvalidInstance, choice_probabilities, run_episode, sample_choice
from .harness import ExperimentConfig, generate_instance, run_experiment, run_simulation
from .optimizer import EnumerationTooLarge, OptimizationResult, optimize_exact, optimize_local
from .risk import CriterionConstants, RiskCriterion, constants, empirical_evaluate, evaluate

__version__ = "0.1.0"
