"""
Battery and grid models for essopt.

This module holds the battery (ESS) and transformer parameters, the per-step
Schedule record, the state-of-charge recursion, start counting and the
feasibility check every schedule goes through before it is reported.
"""

import csv
import io
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import ParameterError, ProfileError, ScheduleError
from .timeseries import Horizon, Profile

DEFAULT_TOLERANCE = 1e-6

# A charge or discharge state carries at least this share of the rated power
MIN_ACTIVE_POWER_FRACTION = 1e-4

SCHEDULE_HEADER = ("step", "C", "D", "p_in_kw", "p_out_kw", "p_dn_kw", "p_up_kw", "soc")


@dataclass(frozen=True)
class EssParams:
    """
    Battery energy storage parameters.

    Attributes:
        capacity: Rated energy E, kWh
        rated_power: Rated charge/discharge power, kW
        soc_init: SOC before the first step, fraction
        soc_min: Lowest allowed SOC, fraction
        soc_max: Highest allowed SOC, fraction
        eta_c: Charging efficiency
        eta_d: Discharging efficiency
        max_starts: Cap on charge starts and on discharge starts per day
        constant_power_mode: Hold power constant within a charge/discharge run
    """

    capacity: float = 8000.0
    rated_power: float = 4000.0
    soc_init: float = 0.05
    soc_min: float = 0.05
    soc_max: float = 0.95
    eta_c: float = 0.88
    eta_d: float = 0.90
    max_starts: int = 2
    constant_power_mode: bool = True

    def __post_init__(self):
        for name in ("capacity", "rated_power", "soc_init", "soc_min", "soc_max", "eta_c", "eta_d"):
            if not math.isfinite(getattr(self, name)):
                raise ParameterError("must be finite", f"ess.{name}")
        if self.capacity <= 0:
            raise ParameterError(f"must be positive, got {self.capacity}", "ess.capacity")
        if self.rated_power <= 0:
            raise ParameterError(f"must be positive, got {self.rated_power}", "ess.rated_power")
        if not 0.0 <= self.soc_min <= 1.0:
            raise ParameterError(f"must lie in [0, 1], got {self.soc_min}", "ess.soc_min")
        if not 0.0 <= self.soc_max <= 1.0:
            raise ParameterError(f"must lie in [0, 1], got {self.soc_max}", "ess.soc_max")
        if self.soc_min > self.soc_max:
            raise ParameterError(f"{self.soc_min} exceeds soc_max {self.soc_max}", "ess.soc_min")
        if not self.soc_min <= self.soc_init <= self.soc_max:
            raise ParameterError(
                f"{self.soc_init} outside [soc_min, soc_max] = [{self.soc_min}, {self.soc_max}]",
                "ess.soc_init")
        if not 0.0 < self.eta_c <= 1.0:
            raise ParameterError(f"must lie in (0, 1], got {self.eta_c}", "ess.eta_c")
        if not 0.0 < self.eta_d <= 1.0:
            raise ParameterError(f"must lie in (0, 1], got {self.eta_d}", "ess.eta_d")
        if isinstance(self.max_starts, bool) or not isinstance(self.max_starts, int) or self.max_starts < 0:
            raise ParameterError(f"must be a non-negative integer, got {self.max_starts!r}",
                                 "ess.max_starts")

    @property
    def min_active_power(self) -> float:
        """Smallest power (kW) a charging or discharging step may carry."""
        return MIN_ACTIVE_POWER_FRACTION * self.rated_power


@dataclass(frozen=True)
class GridParams:
    """Distribution transformer rating, used as a kW bound on grid exchange."""

    transformer_rating: float = 12500.0

    def __post_init__(self):
        if not (math.isfinite(self.transformer_rating) and self.transformer_rating > 0):
            raise ParameterError(f"must be positive, got {self.transformer_rating}",
                                 "grid.transformer_rating")


@dataclass(frozen=True)
class SitePreset:
    """Battery, transformer and installed PV of one of the two case-study users."""

    ess: EssParams
    grid: GridParams
    pv_capacity: float


PRESETS = {
    "A": SitePreset(EssParams(), GridParams(12500.0), 6250.0),
    "B": SitePreset(EssParams(capacity=2000.0, rated_power=1000.0, eta_c=0.85, eta_d=0.85),
                    GridParams(6000.0), 2000.0),
}


def preset(name: str) -> SitePreset:
    try:
        return PRESETS[str(name).strip().upper()]
    except KeyError:
        raise ParameterError(f"unknown preset {name!r}, expected one of {sorted(PRESETS)}",
                             "preset") from None


# ---------------- SCHEDULE ---------------------
@dataclass(frozen=True)
class Schedule:
    """
    Per-step battery and grid decisions.

    C and D are the charge/discharge states, p_dn/p_up the grid import and
    export at the gateway meter, soc the state of charge at the end of each
    step.
    """

    horizon: Horizon
    charge: Tuple[int, ...]
    discharge: Tuple[int, ...]
    p_in: Tuple[float, ...]
    p_out: Tuple[float, ...]
    p_dn: Tuple[float, ...]
    p_up: Tuple[float, ...]
    soc: Tuple[float, ...]

    def __post_init__(self):
        for name in ("charge", "discharge"):
            object.__setattr__(self, name, tuple(int(round(v)) for v in getattr(self, name)))
        for name in ("p_in", "p_out", "p_dn", "p_up", "soc"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        n = self.horizon.total_steps
        for name in ("charge", "discharge", "p_in", "p_out", "p_dn", "p_up", "soc"):
            if len(getattr(self, name)) != n:
                raise ScheduleError(f"schedule field {name} has {len(getattr(self, name))} values, "
                                    f"horizon needs {n}")

    @property
    def state(self) -> Tuple[int, ...]:
        """C(t) - D(t): 1 charging, -1 discharging, 0 standby."""
        return tuple(c - d for c, d in zip(self.charge, self.discharge))

    def export_energy(self) -> float:
        """Energy sent to the grid over the horizon, kWh."""
        return float(sum(self.p_up)) * self.horizon.step_hours

    def to_csv(self) -> str:
        """Schedule CSV with the C-D state signal as a trailing column."""
        lines = [",".join(SCHEDULE_HEADER + ("state",))]
        for t in range(self.horizon.total_steps):
            lines.append(f"{t},{self.charge[t]},{self.discharge[t]},{self.p_in[t]!r},{self.p_out[t]!r},"
                         f"{self.p_dn[t]!r},{self.p_up[t]!r},{self.soc[t]!r},{self.state[t]}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str, horizon: Horizon) -> "Schedule":
        """
        Read a schedule CSV written by to_csv (the state column is optional).

        Raises:
            ProfileError: on a bad header, row count or cell
        """
        rows = [r for r in csv.reader(io.StringIO(text)) if any(c.strip() for c in r)]
        if not rows:
            raise ProfileError("empty schedule file")
        header = tuple(c.strip() for c in rows[0])
        if header[:len(SCHEDULE_HEADER)] != SCHEDULE_HEADER:
            raise ProfileError(f"expected header {','.join(SCHEDULE_HEADER)}")
        data = rows[1:]
        if len(data) != horizon.total_steps:
            raise ProfileError(f"expected {horizon.total_steps} rows, got {len(data)}")
        columns: List[List[float]] = [[] for _ in SCHEDULE_HEADER]
        for i, row in enumerate(data):
            for j, name in enumerate(SCHEDULE_HEADER):
                try:
                    columns[j].append(float(row[j]))
                except (ValueError, IndexError):
                    raise ProfileError("not a number", row=i, field=name) from None
            for j, name in ((0, "step"), (1, "C"), (2, "D")):
                if not columns[j][-1].is_integer():
                    raise ProfileError(f"expected an integer, got {row[j].strip()}", row=i, field=name)
            if int(columns[0][-1]) != i:
                raise ProfileError(f"step index out of order, expected {i}", row=i, field="step")
        return cls(horizon, *columns[1:])

    @classmethod
    def standby(cls, horizon: Horizon, soc_init: float, pv: Profile, load: Profile) -> "Schedule":
        """All-standby schedule; the grid covers the net load."""
        net = load.as_array() - pv.as_array()
        n = horizon.total_steps
        return cls(horizon, [0] * n, [0] * n, [0.0] * n, [0.0] * n,
                   np.maximum(net, 0.0), np.maximum(-net, 0.0), [soc_init] * n)


# ---------------- SIMULATION -------------------
def soc_trajectory(
    params: EssParams,
    horizon: Horizon,
    p_in: Sequence[float],
    p_out: Sequence[float],
    charge: Sequence[int],
    discharge: Sequence[int],
) -> np.ndarray:
    """
    State of charge at the end of every step.

    S(t) = S(t-1) + [eta_c*C(t)*P_in(t) - D(t)*P_out(t)/eta_d] * dt / E,
    starting from S(-1) = soc_init. No clipping is applied.

    Raises:
        ScheduleError: when a series length differs from the horizon
    """
    n = horizon.total_steps
    arrays = [np.asarray(a, dtype=float) for a in (p_in, p_out, charge, discharge)]
    for name, a in zip(("p_in", "p_out", "C", "D"), arrays):
        if a.shape != (n,):
            raise ScheduleError(f"{name} has {a.size} values, horizon needs {n}")
    p_in_a, p_out_a, c_a, d_a = arrays
    delta = (params.eta_c * c_a * p_in_a - d_a * p_out_a / params.eta_d) * horizon.step_hours / params.capacity
    return params.soc_init + np.cumsum(delta)


def count_starts(binary_series: Sequence[int], initial_prev: int = 0) -> int:
    """
    Count 0 -> 1 transitions, treating `initial_prev` as the value before step 0.

    Raises:
        ScheduleError: if a value is not 0 or 1
    """
    prev = initial_prev
    if prev not in (0, 1):
        raise ScheduleError(f"initial state must be 0 or 1, got {initial_prev!r}")
    starts = 0
    for t, b in enumerate(binary_series):
        if b not in (0, 1):
            raise ScheduleError(f"non-binary value {b!r} at step {t}")
        if b == 1 and prev == 0:
            starts += 1
        prev = b
    return starts


def daily_starts(binary_series: Sequence[int], horizon: Horizon) -> List[int]:
    """Starts per day; a run crossing midnight counts on the day it began."""
    n = horizon.steps_per_day
    counts = []
    for day in range(horizon.days):
        prev = binary_series[day * n - 1] if day > 0 else 0
        counts.append(count_starts(binary_series[day * n:(day + 1) * n], int(prev)))
    return counts


# ---------------- VALIDATION -------------------
class ConstraintKind(str, Enum):
    """The constraint family a violation belongs to."""
    BINARY = "binary"
    STATE_EXCLUSIVITY = "state_exclusivity"
    POWER_BOUND = "power_bound"
    SOC_RECURSION = "soc_recursion"
    SOC_BOUND = "soc_bound"
    START_CAP = "start_cap"
    CONSTANT_POWER = "constant_power"
    EXCHANGE = "exchange"
    BALANCE = "balance"
    TERMINAL_SOC = "terminal_soc"


@dataclass(frozen=True)
class Violation:
    """One failed constraint; `step` is None for whole-day constraints."""

    constraint: ConstraintKind
    step: Optional[int]
    detail: str

    def __str__(self) -> str:
        where = f" at step {self.step}" if self.step is not None else ""
        return f"{self.constraint.value}{where}: {self.detail}"


def validate_schedule(
    schedule: Schedule,
    params: EssParams,
    grid: GridParams,
    pv: Profile,
    load: Profile,
    tolerance: float = DEFAULT_TOLERANCE,
    terminal_soc_equals_initial: bool = False,
) -> List[Violation]:
    """
    Check a schedule against every battery and grid constraint.

    Power checks use `tolerance` scaled by the relevant rating (kW), SOC
    checks use it as a fraction.

    Returns:
        The violations found, empty when the schedule is feasible
    """
    horizon = schedule.horizon
    if pv.horizon != horizon or load.horizon != horizon:
        raise ScheduleError("schedule and profiles are on different horizons")

    violations: List[Violation] = []
    p_tol = tolerance * max(1.0, params.rated_power)
    g_tol = tolerance * max(1.0, grid.transformer_rating)
    n = horizon.total_steps
    C, D = schedule.charge, schedule.discharge

    binaries_ok = True
    for t in range(n):
        if C[t] not in (0, 1) or D[t] not in (0, 1):
            violations.append(Violation(ConstraintKind.BINARY, t, f"C={C[t]}, D={D[t]}"))
            binaries_ok = False
            continue
        if C[t] + D[t] > 1:
            violations.append(Violation(ConstraintKind.STATE_EXCLUSIVITY, t,
                                        "charging and discharging at once"))
        if not -p_tol <= schedule.p_in[t] <= params.rated_power * C[t] + p_tol:
            violations.append(Violation(ConstraintKind.POWER_BOUND, t,
                                        f"p_in {schedule.p_in[t]} outside [0, {params.rated_power * C[t]}]"))
        if not -p_tol <= schedule.p_out[t] <= params.rated_power * D[t] + p_tol:
            violations.append(Violation(ConstraintKind.POWER_BOUND, t,
                                        f"p_out {schedule.p_out[t]} outside [0, {params.rated_power * D[t]}]"))
        if C[t] and schedule.p_in[t] <= p_tol:
            violations.append(Violation(ConstraintKind.POWER_BOUND, t, "charge state without charge power"))
        if D[t] and schedule.p_out[t] <= p_tol:
            violations.append(Violation(ConstraintKind.POWER_BOUND, t,
                                        "discharge state without discharge power"))

    soc = soc_trajectory(params, horizon, schedule.p_in, schedule.p_out, C, D)
    for t in range(n):
        if abs(soc[t] - schedule.soc[t]) > tolerance:
            violations.append(Violation(ConstraintKind.SOC_RECURSION, t,
                                        f"stored soc {schedule.soc[t]} != simulated {soc[t]}"))
        if not params.soc_min - tolerance <= schedule.soc[t] <= params.soc_max + tolerance:
            violations.append(Violation(ConstraintKind.SOC_BOUND, t,
                                        f"soc {schedule.soc[t]} outside [{params.soc_min}, {params.soc_max}]"))
    if terminal_soc_equals_initial and n and abs(schedule.soc[-1] - params.soc_init) > tolerance:
        violations.append(Violation(ConstraintKind.TERMINAL_SOC, n - 1,
                                    f"final soc {schedule.soc[-1]} != initial {params.soc_init}"))

    if binaries_ok:
        for label, series in (("charge", C), ("discharge", D)):
            for day, starts in enumerate(daily_starts(series, horizon)):
                if starts > params.max_starts:
                    violations.append(Violation(ConstraintKind.START_CAP, None,
                                                f"day {day}: {starts} {label} starts, cap {params.max_starts}"))
        if params.constant_power_mode:
            for t in range(1, n):
                if C[t - 1] and C[t] and abs(schedule.p_in[t] - schedule.p_in[t - 1]) > p_tol:
                    violations.append(Violation(ConstraintKind.CONSTANT_POWER, t,
                                                "charge power changes inside a charge run"))
                if D[t - 1] and D[t] and abs(schedule.p_out[t] - schedule.p_out[t - 1]) > p_tol:
                    violations.append(Violation(ConstraintKind.CONSTANT_POWER, t,
                                                "discharge power changes inside a discharge run"))

    pv_a, load_a = pv.values, load.values
    for t in range(n):
        dn, up = schedule.p_dn[t], schedule.p_up[t]
        if not (-g_tol <= dn <= grid.transformer_rating + g_tol and -g_tol <= up <= grid.transformer_rating + g_tol):
            violations.append(Violation(ConstraintKind.EXCHANGE, t,
                                        f"exchange ({dn}, {up}) outside [0, {grid.transformer_rating}]"))
        elif min(dn, up) > g_tol:
            violations.append(Violation(ConstraintKind.EXCHANGE, t, "importing and exporting at once"))
        residual = (pv_a[t] + D[t] * schedule.p_out[t] + dn) - (up + C[t] * schedule.p_in[t] + load_a[t])
        if abs(residual) > g_tol:
            violations.append(Violation(ConstraintKind.BALANCE, t, f"power balance residual {residual} kW"))

    return violations
