"""Decentralized channel access under jamming: estimators, agents and simulator."""
from .channel_env import ChannelModel, SlotOutcome, availability_floor, draw_occupancy, resolve_slot
from .config import ExperimentConfig, config_from_dict, make_config, parse_config
from .errors import (
    ConfigurationError,
    CrnJamError,
    EstimationUnavailable,
    MissingFieldError,
    ModelError,
    RangeViolationError,
    ScheduleOverflowError,
)
from .estimators import LearningParams, PhaseSchedule, optimize_window, phase_lengths
from .sim_runner import (
    RegretCurve,
    Trajectory,
    oracle_throughput,
    regret_curve,
    run_episode,
    run_experiment,
)

__version__ = "0.1.0"
