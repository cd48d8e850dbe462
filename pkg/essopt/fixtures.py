"""
Synthetic PV and load profiles for essopt.

The generated week has a PV bell peaked at 13:00 scaled to the installed PV
capacity and a near-flat load around 3.5 MW. Values are seeded and entirely
synthetic.
"""

from typing import Tuple

import numpy as np

from .device import preset
from .timeseries import Horizon, Profile, ProfileKind

DEFAULT_LOAD_KW = 3500.0
PV_START_HOUR = 6.0
PV_END_HOUR = 20.0


def pv_shape(hours: np.ndarray) -> np.ndarray:
    """Clear-sky shape in [0, 1]: zero before 06:00 and after 20:00, 1 at 13:00."""
    phase = np.pi * (hours - PV_START_HOUR) / (PV_END_HOUR - PV_START_HOUR)
    return np.maximum(0.0, np.sin(phase)) ** 1.5


def generate_week(
    seed: int = 0,
    steps_per_day: int = 96,
    pv_capacity: float = 6250.0,
    load_kw: float = DEFAULT_LOAD_KW,
    days: int = 7,
) -> Tuple[Profile, Profile]:
    """
    Generate seeded PV and load profiles.

    Each day draws a weather factor in [0.85, 1.0]; PV gets 2 % and load 3 %
    multiplicative noise per step.

    Returns:
        A tuple of (pv profile, load profile)
    """
    horizon = Horizon(days, steps_per_day)
    rng = np.random.default_rng(seed)
    hours = np.array([horizon.clock_hour(t) for t in range(horizon.total_steps)])

    weather = np.repeat(rng.uniform(0.85, 1.0, size=days), steps_per_day)
    pv_noise = 1.0 + 0.02 * rng.standard_normal(horizon.total_steps)
    pv = np.maximum(0.0, pv_capacity * weather * pv_shape(hours) * pv_noise)

    load_noise = 1.0 + 0.03 * rng.standard_normal(horizon.total_steps)
    load = np.maximum(0.0, load_kw * load_noise)

    return Profile(ProfileKind.PV, pv, horizon), Profile(ProfileKind.LOAD, load, horizon)


def preset_week(name: str = "A", seed: int = 0, steps_per_day: int = 96, days: int = 7) -> Tuple[Profile, Profile]:
    """generate_week scaled to a site preset's installed PV."""
    return generate_week(seed, steps_per_day, preset(name).pv_capacity, days=days)
