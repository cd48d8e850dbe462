"""
Day-ahead battery scheduling MILP for essopt.

build_model turns an Instance into a Model plus a VarMap naming every
per-step variable, extract_schedule turns an optimal Solution back into a
normalized Schedule, and objective_components prices a schedule with the
economic (F1), carbon (F2) and new-energy-absorption (F3) objectives.
"""

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .branch_and_bound import solve
from .device import (
    EssParams, GridParams, Schedule, soc_trajectory, validate_schedule
)
from .errors import (
    HorizonError, InfeasibleError, ProfileError, ScheduleError, SolverLimitError, WeightsError
)
from .logging import get_logger
from .milp import Model, Sense, Solution, SolverConfig, VarKind
from .status import SolutionStatus
from .tariff import (
    CarbonModel, FeedInPolicy, TouTariff, default_tariff, feed_in_series, price_series
)
from .timeseries import Horizon, Profile, ProfileKind, day_slice

logger = get_logger("essopt.formulation")

WEIGHT_SUM_TOL = 1e-9

# Table-style reports quote money in units of 10^4 $
REPORT_MONEY_SCALE = 1e-4


# ---------------- WEIGHTS ----------------------
@dataclass(frozen=True)
class Weights:
    """Objective weights alpha1 (economic), alpha2 (carbon), alpha3 (new energy)."""

    alpha1: float = 1.0
    alpha2: float = 0.0
    alpha3: float = 0.0

    def __post_init__(self):
        values = self.as_tuple()
        for i, value in enumerate(values, start=1):
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value >= 0):
                raise WeightsError(f"must be a non-negative number, got {value!r}", f"weights.alpha{i}")
        if abs(sum(values) - 1.0) > WEIGHT_SUM_TOL:
            raise WeightsError(f"weights must sum to 1, got {sum(values)!r}", "weights")

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.alpha1, self.alpha2, self.alpha3)

    def __str__(self) -> str:
        return f"({self.alpha1:g}, {self.alpha2:g}, {self.alpha3:g})"


def combine(weights: Weights, f1: float, f2: float, f3: float) -> float:
    """F = alpha1*F1 + alpha2*F2 + alpha3*F3."""
    return weights.alpha1 * f1 + weights.alpha2 * f2 + weights.alpha3 * f3


@dataclass(frozen=True)
class InstanceFlags:
    """
    Modelling switches.

    Attributes:
        constant_power_mode: Hold charge/discharge power constant within a run
        terminal_soc_equals_initial: Force the final SOC back to soc_init
        clamp_f3_nonnegative: Evaluate F3 with per-step export net of
            discharge clamped at zero (ex-post evaluation only)
    """

    constant_power_mode: bool = True
    terminal_soc_equals_initial: bool = False
    clamp_f3_nonnegative: bool = False


# ---------------- INSTANCE ---------------------
@dataclass(frozen=True)
class Instance:
    """Everything one optimization needs."""

    horizon: Horizon
    pv: Profile
    load: Profile
    ess: EssParams = field(default_factory=EssParams)
    grid: GridParams = field(default_factory=GridParams)
    tariff: TouTariff = field(default_factory=default_tariff)
    feed_in: FeedInPolicy = field(default_factory=FeedInPolicy)
    carbon: CarbonModel = field(default_factory=CarbonModel)
    weights: Weights = field(default_factory=Weights)
    flags: InstanceFlags = field(default_factory=InstanceFlags)

    def __post_init__(self):
        if self.pv.kind is not ProfileKind.PV:
            raise ProfileError("pv profile has kind load")
        if self.load.kind is not ProfileKind.LOAD:
            raise ProfileError("load profile has kind pv")
        if self.pv.horizon != self.horizon or self.load.horizon != self.horizon:
            raise HorizonError("profiles and instance are on different horizons", "horizon")
        # Validates the length of a per-step carbon series
        self.carbon.series(self.horizon)
        if self.ess.constant_power_mode != self.flags.constant_power_mode:
            object.__setattr__(self, "ess", dataclasses.replace(
                self.ess, constant_power_mode=self.flags.constant_power_mode))

    def day(self, day_index: int) -> "Instance":
        """The one-day instance of `day_index`, starting again from soc_init."""
        return dataclasses.replace(
            self,
            horizon=self.horizon.single_day(),
            pv=day_slice(self.pv, day_index),
            load=day_slice(self.load, day_index),
            carbon=self.carbon.slice_day(self.horizon, day_index),
        )

    def days(self) -> List["Instance"]:
        return [self.day(d) for d in range(self.horizon.days)]

    def with_weights(self, weights: Weights) -> "Instance":
        return dataclasses.replace(self, weights=weights)

    def with_feed_in(self, feed_in: FeedInPolicy) -> "Instance":
        return dataclasses.replace(self, feed_in=feed_in)

    def with_ess(self, **changes) -> "Instance":
        return dataclasses.replace(self, ess=dataclasses.replace(self.ess, **changes))

    def with_flags(self, **changes) -> "Instance":
        return dataclasses.replace(self, flags=dataclasses.replace(self.flags, **changes))

    def scale_prices(self, k: float) -> "Instance":
        """Multiply every price (tariff, feed-in, carbon sink) by k."""
        return dataclasses.replace(self, tariff=self.tariff.scaled(k), feed_in=self.feed_in.scaled(k),
                                   carbon=self.carbon.scaled(k))

    def validate(self, schedule: Schedule, tolerance: float = 1e-6):
        return validate_schedule(schedule, self.ess, self.grid, self.pv, self.load, tolerance,
                                 self.flags.terminal_soc_equals_initial)


# ---------------- MODEL ------------------------
@dataclass
class VarMap:
    """Variable ids per step. b_c/b_d are empty without constant-power mode."""

    p_in: List[int] = field(default_factory=list)
    p_out: List[int] = field(default_factory=list)
    p_dn: List[int] = field(default_factory=list)
    p_up: List[int] = field(default_factory=list)
    soc: List[int] = field(default_factory=list)
    c: List[int] = field(default_factory=list)
    d: List[int] = field(default_factory=list)
    s_c: List[int] = field(default_factory=list)
    s_d: List[int] = field(default_factory=list)
    b_c: List[int] = field(default_factory=list)
    b_d: List[int] = field(default_factory=list)
    u: List[int] = field(default_factory=list)

    def groups(self) -> Dict[str, List[int]]:
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}

    def all_ids(self) -> List[int]:
        return [i for ids in self.groups().values() for i in ids]


def build_model(instance: Instance) -> Tuple[Model, VarMap]:
    """
    Build the scheduling MILP of an instance.

    Binary-times-continuous products are removed exactly: P_in <= P*C
    already forces P_in = C*P_in, and likewise for discharge. A step in the
    charge (discharge) state carries at least EssParams.min_active_power,
    so the state never bridges two runs with idle steps.

    Returns:
        The model and the map from per-step quantities to variable ids
    """
    h = instance.horizon
    ess, grid, w = instance.ess, instance.grid, instance.weights
    n, dt = h.total_steps, h.step_hours
    P, PT, E = ess.rated_power, grid.transformer_rating, ess.capacity
    floor = ess.min_active_power
    cpm = instance.flags.constant_power_mode

    model = Model(f"essopt_T{h.days}_N{h.steps_per_day}")
    vm = VarMap()
    cont, binary = VarKind.CONTINUOUS, VarKind.BINARY
    for t in range(n):
        vm.p_in.append(model.add_variable(cont, 0.0, P, f"p_in_{t}"))
        vm.p_out.append(model.add_variable(cont, 0.0, P, f"p_out_{t}"))
        vm.p_dn.append(model.add_variable(cont, 0.0, PT, f"p_dn_{t}"))
        vm.p_up.append(model.add_variable(cont, 0.0, PT, f"p_up_{t}"))
        vm.soc.append(model.add_variable(cont, ess.soc_min, ess.soc_max, f"soc_{t}"))
        vm.c.append(model.add_variable(binary, 0.0, 1.0, f"c_{t}"))
        vm.d.append(model.add_variable(binary, 0.0, 1.0, f"d_{t}"))
        vm.s_c.append(model.add_variable(binary, 0.0, 1.0, f"s_c_{t}"))
        vm.s_d.append(model.add_variable(binary, 0.0, 1.0, f"s_d_{t}"))
        if cpm:
            # Step 0 has no predecessor inside a run
            top = 0.0 if t == 0 else 1.0
            vm.b_c.append(model.add_variable(binary, 0.0, top, f"b_c_{t}"))
            vm.b_d.append(model.add_variable(binary, 0.0, top, f"b_d_{t}"))
        vm.u.append(model.add_variable(binary, 0.0, 1.0, f"u_{t}"))

    pv, load = instance.pv.values, instance.load.values
    charge_gain = ess.eta_c * dt / E
    discharge_loss = dt / (ess.eta_d * E)

    for t in range(n):
        # power only flows in the matching state, never both at once
        model.add_constraint({vm.p_in[t]: 1.0, vm.c[t]: -P}, Sense.LE, 0.0, f"charge_limit_{t}")
        model.add_constraint({vm.p_out[t]: 1.0, vm.d[t]: -P}, Sense.LE, 0.0, f"discharge_limit_{t}")
        model.add_constraint({vm.c[t]: 1.0, vm.d[t]: 1.0}, Sense.LE, 1.0, f"exclusive_{t}")

        soc_expr = {vm.soc[t]: 1.0, vm.p_in[t]: -charge_gain, vm.p_out[t]: discharge_loss}
        if t == 0:
            model.add_constraint(soc_expr, Sense.EQ, ess.soc_init, f"soc_balance_{t}")
        else:
            soc_expr[vm.soc[t - 1]] = -1.0
            model.add_constraint(soc_expr, Sense.EQ, 0.0, f"soc_balance_{t}")

        for label, state, start in (("charge", vm.c, vm.s_c), ("discharge", vm.d, vm.s_d)):
            if t == 0:
                model.add_constraint({start[t]: 1.0, state[t]: -1.0}, Sense.GE, 0.0, f"{label}_start_lo_{t}")
            else:
                model.add_constraint({start[t]: 1.0, state[t]: -1.0, state[t - 1]: 1.0}, Sense.GE, 0.0,
                                     f"{label}_start_lo_{t}")
                model.add_constraint({start[t]: 1.0, state[t - 1]: 1.0}, Sense.LE, 1.0,
                                     f"{label}_start_prev_{t}")
            model.add_constraint({start[t]: 1.0, state[t]: -1.0}, Sense.LE, 0.0, f"{label}_start_hi_{t}")

        for label, state, power in (("charge", vm.c, vm.p_in), ("discharge", vm.d, vm.p_out)):
            model.add_constraint({power[t]: 1.0, state[t]: -floor}, Sense.GE, 0.0, f"{label}_floor_{t}")

        if cpm and t > 0:
            for label, state, flag, power in (("charge", vm.c, vm.b_c, vm.p_in),
                                              ("discharge", vm.d, vm.b_d, vm.p_out)):
                model.add_constraint({flag[t]: 1.0, state[t - 1]: -1.0}, Sense.LE, 0.0, f"{label}_run_prev_{t}")
                model.add_constraint({flag[t]: 1.0, state[t]: -1.0}, Sense.LE, 0.0, f"{label}_run_cur_{t}")
                model.add_constraint({flag[t]: 1.0, state[t - 1]: -1.0, state[t]: -1.0}, Sense.GE, -1.0,
                                     f"{label}_run_and_{t}")
                model.add_constraint({power[t]: 1.0, power[t - 1]: -1.0, flag[t]: P}, Sense.LE, P,
                                     f"{label}_hold_up_{t}")
                model.add_constraint({power[t - 1]: 1.0, power[t]: -1.0, flag[t]: P}, Sense.LE, P,
                                     f"{label}_hold_dn_{t}")

        model.add_constraint({vm.p_dn[t]: 1.0, vm.u[t]: -PT}, Sense.LE, 0.0, f"import_gate_{t}")
        model.add_constraint({vm.p_up[t]: 1.0, vm.u[t]: PT}, Sense.LE, PT, f"export_gate_{t}")

        model.add_constraint({vm.p_out[t]: 1.0, vm.p_dn[t]: 1.0, vm.p_up[t]: -1.0, vm.p_in[t]: -1.0},
                             Sense.EQ, load[t] - pv[t], f"balance_{t}")

    for day in range(h.days):
        steps = range(day * h.steps_per_day, (day + 1) * h.steps_per_day)
        for label, start in (("charge", vm.s_c), ("discharge", vm.s_d)):
            model.add_constraint({start[t]: 1.0 for t in steps}, Sense.LE, float(ess.max_starts),
                                 f"{label}_starts_day{day}")

    if instance.flags.terminal_soc_equals_initial:
        model.add_constraint({vm.soc[n - 1]: 1.0}, Sense.EQ, ess.soc_init, "terminal_soc")

    prices = price_series(instance.tariff, h)
    feed_in = feed_in_series(instance.feed_in, h)
    carbon = instance.carbon.series(h)
    sink = instance.carbon.sink_price
    objective: Dict[int, float] = {}
    for t in range(n):
        objective[vm.p_dn[t]] = dt * (w.alpha1 * prices[t] + w.alpha2 * carbon[t] * sink)
        objective[vm.p_up[t]] = dt * (w.alpha3 - w.alpha1) * feed_in[t]
        objective[vm.p_out[t]] = -dt * w.alpha3 * feed_in[t]
    model.set_objective(objective)

    logger.debug(f"built {model!r}")
    return model, vm


# ---------------- SCHEDULE ---------------------
def _runs(states: np.ndarray) -> List[Tuple[int, int]]:
    """Maximal [start, end) blocks where states == 1."""
    runs = []
    t, n = 0, len(states)
    while t < n:
        if states[t]:
            start = t
            while t < n and states[t]:
                t += 1
            runs.append((start, t))
        else:
            t += 1
    return runs


def _normalize(states: np.ndarray, power: np.ndarray, threshold: float, hold: bool) -> None:
    """
    Turn every on step with (near) zero power into standby, splitting the
    run it sat in, then snap each remaining run to its mean power when
    `hold` is set. Works in place.
    """
    power[states == 0] = 0.0
    idle = (states == 1) & (power <= threshold)
    states[idle], power[idle] = 0, 0.0
    if hold:
        for start, end in _runs(states):
            power[start:end] = power[start:end].mean()


def extract_schedule(solution: Solution, varmap: VarMap, instance: Instance,
                     tolerance: float = 1e-6) -> Schedule:
    """
    Read a Schedule out of an optimal solution.

    Steps whose binary is on with (near) zero power are rewritten to
    standby. Grid flows are recomputed from the power balance
    and SOC from the battery recursion.

    Raises:
        InfeasibleError: for an Infeasible solution
        SolverLimitError: for a NodeLimit or GapLimit solution
        ScheduleError: if the extracted schedule fails validation
    """
    if solution.status is SolutionStatus.INFEASIBLE:
        raise InfeasibleError("the model is infeasible; no schedule to extract")
    if not solution.is_optimal:
        raise SolverLimitError(f"solver stopped with status {solution.status.value}")

    x = solution.values
    ess, h = instance.ess, instance.horizon
    charge = np.rint(x[varmap.c]).astype(int)
    discharge = np.rint(x[varmap.d]).astype(int)
    p_in = np.clip(x[varmap.p_in], 0.0, ess.rated_power)
    p_out = np.clip(x[varmap.p_out], 0.0, ess.rated_power)

    threshold = tolerance * max(1.0, ess.rated_power)
    hold = instance.flags.constant_power_mode
    _normalize(charge, p_in, threshold, hold)
    _normalize(discharge, p_out, threshold, hold)

    soc = np.clip(soc_trajectory(ess, h, p_in, p_out, charge, discharge), ess.soc_min, ess.soc_max)
    net = instance.load.as_array() + p_in - instance.pv.as_array() - p_out
    schedule = Schedule(h, charge, discharge, p_in, p_out,
                        np.maximum(net, 0.0), np.maximum(-net, 0.0), soc)

    violations = instance.validate(schedule, tolerance)
    if violations:
        detail = "; ".join(str(v) for v in violations[:5])
        raise ScheduleError(f"extracted schedule has {len(violations)} violations: {detail}")
    return schedule


# ---------------- OBJECTIVES -------------------
@dataclass(frozen=True)
class ObjectiveReport:
    """Objective components and their weighted sum, all in $."""

    f1: float
    f2: float
    f3: float
    f: float

    def scaled(self, k: float) -> "ObjectiveReport":
        return ObjectiveReport(self.f1 * k, self.f2 * k, self.f3 * k, self.f * k)

    def as_dict(self) -> Dict[str, float]:
        return {"F1": self.f1, "F2": self.f2, "F3": self.f3, "F": self.f}


def objective_components(schedule: Schedule, instance: Instance, tolerance: float = 1e-6) -> ObjectiveReport:
    """
    Price a feasible schedule.

    F1 = sum(P_dn*p_r - P_up*p_n)*dt, F2 = sum(P_dn*c*p_c)*dt and
    F3 = sum(P_up*(1-D) + (P_up-P_out)*D)*p_n*dt.

    Raises:
        ScheduleError: if the schedule violates any constraint
    """
    violations = instance.validate(schedule, tolerance)
    if violations:
        detail = "; ".join(str(v) for v in violations[:5])
        raise ScheduleError(f"cannot price an infeasible schedule ({len(violations)} violations): {detail}")

    h = instance.horizon
    dt = h.step_hours
    prices = price_series(instance.tariff, h)
    feed_in = feed_in_series(instance.feed_in, h)
    carbon = instance.carbon.series(h)
    p_dn = np.asarray(schedule.p_dn)
    p_up = np.asarray(schedule.p_up)
    p_out = np.asarray(schedule.p_out)
    D = np.asarray(schedule.discharge, dtype=float)

    f1 = float(np.sum(p_dn * prices - p_up * feed_in) * dt)
    f2 = float(np.sum(p_dn * carbon) * instance.carbon.sink_price * dt)
    exported = p_up * (1.0 - D) + (p_up - p_out) * D
    if instance.flags.clamp_f3_nonnegative:
        exported = np.maximum(exported, 0.0)
    f3 = float(np.sum(exported * feed_in) * dt)
    return ObjectiveReport(f1, f2, f3, combine(instance.weights, f1, f2, f3))


@dataclass(frozen=True)
class OptimizationResult:
    schedule: Schedule
    report: ObjectiveReport
    solution: Solution


def optimize(instance: Instance, config: Optional[SolverConfig] = None) -> OptimizationResult:
    """
    Build, solve, extract and price one instance.

    Raises:
        InfeasibleError: if the instance has no feasible schedule
        SolverLimitError: if the solver stops on a limit
    """
    model, varmap = build_model(instance)
    solution = solve(model, config)
    schedule = extract_schedule(solution, varmap, instance)
    report = objective_components(schedule, instance)
    logger.info(f"optimized {instance.horizon.days} day(s) with weights {instance.weights}: "
                f"F1={report.f1:.4f} F2={report.f2:.4f} F3={report.f3:.4f} F={report.f:.4f}")
    return OptimizationResult(schedule, report, solution)
