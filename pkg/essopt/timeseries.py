"""
Discrete-time horizons and PV/load power profiles for essopt.

Step t of a day covers the clock interval [t*dt, (t+1)*dt) hours with
dt = 24/N; step 0 starts at 00:00. Powers are period-average kW, so the
energy of a step is power * dt.
"""

import csv
import io
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Tuple

import numpy as np

from .errors import HorizonError, ProfileError

# Day resolutions for production runs
PRODUCTION_STEPS_PER_DAY = (24, 48, 96, 288)

# Coarse resolutions for the brute-force oracle and small test instances
SMALL_STEPS_PER_DAY = (1, 2, 3, 4, 6, 8, 12)

STEPS_PER_DAY = SMALL_STEPS_PER_DAY + PRODUCTION_STEPS_PER_DAY

PROFILE_HEADER = ("step", "pv_kw", "load_kw")


@dataclass(frozen=True)
class Horizon:
    """Optimization horizon of `days` days split into `steps_per_day` steps."""

    days: int
    steps_per_day: int

    def __post_init__(self):
        if isinstance(self.days, bool) or not isinstance(self.days, int) or self.days < 1:
            raise HorizonError(f"days must be a positive integer, got {self.days!r}", "horizon.days")
        n = self.steps_per_day
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            raise HorizonError(f"steps_per_day must be a positive integer, got {n!r}",
                               "horizon.steps_per_day")
        if n not in STEPS_PER_DAY:
            raise HorizonError(
                f"steps_per_day {n} not supported, expected one of {list(PRODUCTION_STEPS_PER_DAY)} "
                f"or an oracle size {list(SMALL_STEPS_PER_DAY)}",
                "horizon.steps_per_day")

    @property
    def step_hours(self) -> float:
        """Length of one step in hours."""
        return 24.0 / self.steps_per_day

    @property
    def total_steps(self) -> int:
        """Number of steps over all days."""
        return self.days * self.steps_per_day

    def clock_hour(self, step: int) -> float:
        """Start time of `step` within its day, in hours since midnight."""
        return (step % self.steps_per_day) * self.step_hours

    def day_of(self, step: int) -> int:
        """Index of the day containing `step`."""
        return step // self.steps_per_day

    def single_day(self) -> "Horizon":
        """A one-day horizon with the same resolution."""
        return Horizon(1, self.steps_per_day)


def step_hours(horizon: Horizon) -> float:
    """Return the step length 24/N in hours."""
    return horizon.step_hours


class ProfileKind(str, Enum):
    """What a profile measures."""
    PV = "pv"
    LOAD = "load"


@dataclass(frozen=True)
class Profile:
    """
    A non-negative power series (kW per step) on a horizon.

    Attributes:
        kind: PV generation or load demand
        values: One value per step, length horizon.total_steps
        horizon: The horizon the values live on
    """

    kind: ProfileKind
    values: Tuple[float, ...]
    horizon: Horizon

    def __post_init__(self):
        object.__setattr__(self, "kind", ProfileKind(self.kind))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.values) != self.horizon.total_steps:
            raise ProfileError(
                f"{self.kind.value} profile has {len(self.values)} values, "
                f"horizon needs {self.horizon.total_steps}")
        for i, v in enumerate(self.values):
            if not math.isfinite(v) or v < 0:
                raise ProfileError(f"power must be finite and non-negative, got {v!r}",
                                   row=i, field=f"{self.kind.value}_kw")

    def as_array(self) -> np.ndarray:
        """Values as a fresh float array."""
        return np.array(self.values, dtype=float)

    def __len__(self) -> int:
        return len(self.values)


def _parse_cell(text: str, row: int, field: str) -> float:
    # float() is locale independent and only accepts '.' as decimal separator
    try:
        value = float(text.strip())
    except ValueError:
        raise ProfileError(f"not a number: {text!r}", row=row, field=field) from None
    if not math.isfinite(value):
        raise ProfileError(f"not a finite number: {text!r}", row=row, field=field)
    if value < 0:
        raise ProfileError(f"must be non-negative, got {value!r}", row=row, field=field)
    return value


def parse_profiles(csv_text: str, horizon: Horizon) -> Tuple[Profile, Profile]:
    """
    Parse a `step,pv_kw,load_kw` CSV document into PV and load profiles.

    Args:
        csv_text: The CSV text (header plus one row per step)
        horizon: The horizon the rows must cover

    Returns:
        A tuple of (pv profile, load profile)

    Raises:
        ProfileError: on a bad header, row count, step order or cell value
    """
    rows = list(csv.reader(io.StringIO(csv_text)))
    # Trailing blank lines are not data rows
    while rows and not any(cell.strip() for cell in rows[-1]):
        rows.pop()
    if not rows:
        raise ProfileError("empty profile file")
    header = tuple(cell.strip() for cell in rows[0])
    if header != PROFILE_HEADER:
        raise ProfileError(f"expected header {','.join(PROFILE_HEADER)}, got {','.join(header)}")

    data = rows[1:]
    expected = horizon.total_steps
    if len(data) != expected:
        raise ProfileError(f"expected {expected} rows, got {len(data)}")

    pv: List[float] = []
    load: List[float] = []
    for row_number, row in enumerate(data):
        if len(row) != 3:
            raise ProfileError(f"expected 3 fields, got {len(row)}", row=row_number)
        try:
            step = int(row[0].strip())
        except ValueError:
            raise ProfileError(f"not an integer: {row[0]!r}", row=row_number, field="step") from None
        if step != row_number:
            raise ProfileError(f"step index {step} out of order, expected {row_number}",
                               row=row_number, field="step")
        pv.append(_parse_cell(row[1], row_number, "pv_kw"))
        load.append(_parse_cell(row[2], row_number, "load_kw"))

    return Profile(ProfileKind.PV, pv, horizon), Profile(ProfileKind.LOAD, load, horizon)


def render_profiles(pv: Profile, load: Profile) -> str:
    """
    Render a PV/load pair as canonical profile CSV.

    Numbers use repr(), the shortest text that parses back to the same float.
    """
    if pv.horizon != load.horizon:
        raise ProfileError("pv and load profiles are on different horizons")
    lines = [",".join(PROFILE_HEADER)]
    for step, (p, l) in enumerate(zip(pv.values, load.values)):
        lines.append(f"{step},{p!r},{l!r}")
    return "\n".join(lines) + "\n"


def day_slice(profile: Profile, day_index: int) -> Profile:
    """
    Return the one-day sub-profile of `day_index`.

    Raises:
        HorizonError: if the day is outside the profile's horizon
    """
    horizon = profile.horizon
    if not 0 <= day_index < horizon.days:
        raise HorizonError(f"day index {day_index} out of range for a {horizon.days}-day horizon")
    n = horizon.steps_per_day
    return Profile(profile.kind, profile.values[day_index * n:(day_index + 1) * n], horizon.single_day())


def concat_days(profiles: Iterable[Profile]) -> Profile:
    """Join consecutive one-day profiles of the same kind into one profile."""
    profiles = list(profiles)
    if not profiles:
        raise ProfileError("no profiles to join")
    kind = profiles[0].kind
    n = profiles[0].horizon.steps_per_day
    values: List[float] = []
    for p in profiles:
        if p.kind != kind or p.horizon.steps_per_day != n:
            raise ProfileError("profiles differ in kind or resolution")
        values.extend(p.values)
    return Profile(kind, values, Horizon(sum(p.horizon.days for p in profiles), n))
