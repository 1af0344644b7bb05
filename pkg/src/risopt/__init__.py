"""Joint precoder and discrete-phase RIS optimization for MIMO links."""

from ._kernels import BACKEND
from .baselines import baseline_suite, exhaustive_discrete_oracle, waterfilling_oracle
from .channel import (
    ArrayConfig,
    ChannelModelParams,
    ChannelSet,
    Scenario,
    ScenarioGeometry,
    effective_channel,
    generate_channel_set,
)
from .codebook import PhaseCodebook, discretize_solution, phases_from_weights
from .numerics import RngStream
from .objective import LinkBudget, achievable_rate, objective_f
from .optimizer import OptimizerConfig, SolveResult, da_cbpg_solve, refit_precoder

__version__ = "0.1.0"
