"""Trace-driven cell ON/OFF simulation and receding-horizon energy scheduling."""

from .baselines import NightScheduleConfig, allon_controller, night_schedule_controller
from .network import (Cell, FrequencyLayer, Network, Pixel, ScenarioError, load_network,
                      network_to_document, total_contribution)
from .partition import Partition, distributed_controller, partition_network
from .reward import RewardBreakdown, RewardParams, cell_energy, pixel_penalty, step_reward
from .simulator import (ActionVector, ConstraintViolation, SimState, do_sim_step,
                        evaluate_controller, run)
from .synthesis import (Strategy, SynthesisConfig, brute_force_optimal,
                        receding_horizon_controller, synthesize_short)
from .traffic import (DemandModel, DemandTrace, generate_diurnal_trace, load_trace,
                      pixel_demand, pixel_demands)

__all__ = [
    "ActionVector",
    "allon_controller",
    "brute_force_optimal",
    "Cell",
    "cell_energy",
    "ConstraintViolation",
    "DemandModel",
    "DemandTrace",
    "distributed_controller",
    "do_sim_step",
    "evaluate_controller",
    "FrequencyLayer",
    "generate_diurnal_trace",
    "load_network",
    "load_trace",
    "Network",
    "network_to_document",
    "night_schedule_controller",
    "NightScheduleConfig",
    "Partition",
    "partition_network",
    "Pixel",
    "pixel_demand",
    "pixel_demands",
    "pixel_penalty",
    "receding_horizon_controller",
    "RewardBreakdown",
    "RewardParams",
    "run",
    "ScenarioError",
    "SimState",
    "step_reward",
    "Strategy",
    "SynthesisConfig",
    "synthesize_short",
    "total_contribution",
]

__version__ = "0.1.0"
