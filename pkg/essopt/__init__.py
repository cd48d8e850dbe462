"""
essopt - Day-ahead battery scheduling for grid-connected PV microgrids

This library builds the battery dispatch MILP of a microgrid under a
time-of-use tariff, solves it with its own simplex and branch-and-bound
engine, and evaluates the energy bill, carbon cost and grid export of the
resulting schedule.
"""

__version__ = "0.1.0"

from .timeseries import Horizon, Profile, ProfileKind, parse_profiles, render_profiles
from .tariff import CarbonModel, FeedInPolicy, TariffBand, TouTariff, default_tariff
from .device import (
    EssParams, GridParams, Schedule, Violation, count_starts, preset, soc_trajectory, validate_schedule
)
from .milp import Model, Sense, Solution, SolverConfig, VarKind
from .simplex import solve_lp_relaxation
from .branch_and_bound import solve
from .lpformat import read_lp, write_lp
from .formulation import (
    Instance, InstanceFlags, ObjectiveReport, Weights, build_model, combine, extract_schedule,
    objective_components, optimize
)
from .fixtures import generate_week
from .strategy import baseline_schedule, bill_comparison, reop_window_sweep, weight_sweep
from .oracle import DiscretizedInstance, brute_force_optimal, certify
from .config import RunConfig, load_config
from .status import SolutionStatus
from .errors import (
    ConfigError, EssoptError, InfeasibleError, LPParseError, ModelError, ScheduleError, SolverLimitError
)

__all__ = [
    '__version__',
    # Data
    'Horizon', 'Profile', 'ProfileKind', 'parse_profiles', 'render_profiles',
    'CarbonModel', 'FeedInPolicy', 'TariffBand', 'TouTariff', 'default_tariff',
    'EssParams', 'GridParams', 'Schedule', 'Violation', 'count_starts', 'preset',
    'soc_trajectory', 'validate_schedule',
    # Solver
    'Model', 'Sense', 'Solution', 'SolverConfig', 'VarKind', 'SolutionStatus',
    'solve', 'solve_lp_relaxation', 'read_lp', 'write_lp',
    # Optimization
    'Instance', 'InstanceFlags', 'ObjectiveReport', 'Weights', 'build_model', 'combine',
    'extract_schedule', 'objective_components', 'optimize',
    'generate_week', 'baseline_schedule', 'bill_comparison', 'reop_window_sweep', 'weight_sweep',
    'DiscretizedInstance', 'brute_force_optimal', 'certify',
    'RunConfig', 'load_config',
    # Errors
    'ConfigError', 'EssoptError', 'InfeasibleError', 'LPParseError', 'ModelError',
    'ScheduleError', 'SolverLimitError',
]
