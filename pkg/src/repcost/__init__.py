"""Cost coefficients of quantum repeater chains over fiber and vacuum beam guides."""

from .channel import (
    ChannelModel,
    Medium,
    link_success_prob,
    multiplexed_success,
    plob_capacity,
    transmissivity,
)
from .generations import (
    CodeParams,
    Flag,
    Generation,
    MonteCarloReport,
    PerformanceReport,
    RepeaterConfig,
    g1_performance,
    g2_performance,
    g3_performance,
    performance,
    simulate_chain_monte_carlo,
)
from .kernels import BACKEND
from .optimizer import (
    CostReport,
    FixedParams,
    OptimizationResult,
    SearchSpace,
    SweepAxis,
    cost_coefficient,
    optimize,
    sweep,
)
from .protocols import (
    Protocol,
    PurificationSchedule,
    TwoPairState,
    bbpssw_round,
    dejmps_round,
    oracle_circuit,
    swap,
)
from .states import (
    BellDiagonalState,
    depolarize,
    secret_fraction,
    twirl,
    werner_state,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BellDiagonalState",
    "ChannelModel",
    "CodeParams",
    "CostReport",
    "FixedParams",
    "Flag",
    "Generation",
    "Medium",
    "MonteCarloReport",
    "OptimizationResult",
    "PerformanceReport",
    "Protocol",
    "PurificationSchedule",
    "RepeaterConfig",
    "SearchSpace",
    "SweepAxis",
    "TwoPairState",
    "bbpssw_round",
    "cost_coefficient",
    "dejmps_round",
    "depolarize",
    "g1_performance",
    "g2_performance",
    "g3_performance",
    "link_success_prob",
    "multiplexed_success",
    "optimize",
    "oracle_circuit",
    "performance",
    "plob_capacity",
    "secret_fraction",
    "simulate_chain_monte_carlo",
    "swap",
    "sweep",
    "transmissivity",
    "twirl",
    "werner_state",
]
