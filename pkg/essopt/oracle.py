"""
Brute-force scheduling oracle for small horizons.

The oracle enumerates every per-step mode (standby, charge at a level,
discharge at a level) depth-first, pruning only prefixes that are provably
infeasible, and returns the cheapest feasible schedule. certify compares it
with the MILP restricted to the same power levels and with the continuous
MILP.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .branch_and_bound import solve
from .device import EssParams, PRESETS, Schedule, soc_trajectory
from .errors import CertificationError, InfeasibleError, OracleSizeError, ParameterError
from .fixtures import pv_shape
from .formulation import Instance, InstanceFlags, VarMap, Weights, build_model, extract_schedule
from .logging import get_logger
from .milp import Model, Sense, SolverConfig, VarKind
from .tariff import CITY_CARBON_FACTORS, CarbonModel, feed_in_series, price_series
from .timeseries import Horizon, Profile, ProfileKind

logger = get_logger("essopt.oracle")

MAX_COMBINATIONS = 10 ** 8

# SOC slack when pruning; far below the validation tolerance
SOC_TOL = 1e-9

STANDBY, CHARGE, DISCHARGE = 0, 1, -1


@dataclass(frozen=True)
class DiscretizedInstance:
    """An instance whose battery powers are restricted to a few levels (kW)."""

    instance: Instance
    power_levels: Tuple[float, ...]

    def __post_init__(self):
        levels = tuple(float(v) for v in self.power_levels)
        object.__setattr__(self, "power_levels", levels)
        if list(levels) != sorted(set(levels)):
            raise ParameterError(f"levels must be sorted and distinct, got {levels}", "power_levels")
        if 0.0 not in levels:
            raise ParameterError("levels must contain 0", "power_levels")
        if levels[0] < 0 or levels[-1] > self.instance.ess.rated_power:
            raise ParameterError(f"levels must lie in [0, {self.instance.ess.rated_power}]", "power_levels")
        floor = self.instance.ess.min_active_power
        if any(0 < v < floor for v in levels):
            raise ParameterError(f"nonzero levels must be at least {floor} kW", "power_levels")

    @classmethod
    def halves(cls, instance: Instance) -> "DiscretizedInstance":
        """Levels {0, P/2, P}."""
        p = instance.ess.rated_power
        return cls(instance, (0.0, p / 2, p))

    @property
    def active_levels(self) -> Tuple[float, ...]:
        return tuple(v for v in self.power_levels if v > 0)


def count_sequences(dinst: DiscretizedInstance) -> int:
    """
    Number of mode sequences respecting the daily start caps and, in
    constant-power mode, one level per run. SOC and grid limits are ignored.
    """
    h = dinst.instance.horizon
    cap = dinst.instance.ess.max_starts
    hold = dinst.instance.flags.constant_power_mode
    k = len(dinst.active_levels)
    # state: (mode, charge starts today, discharge starts today) -> count
    states: Dict[Tuple[int, int, int], int] = {(STANDBY, 0, 0): 1}
    for t in range(h.total_steps):
        if t > 0 and t % h.steps_per_day == 0:
            merged: Dict[Tuple[int, int, int], int] = {}
            for (mode, _, _), count in states.items():
                merged[(mode, 0, 0)] = merged.get((mode, 0, 0), 0) + count
            states = merged
        nxt: Dict[Tuple[int, int, int], int] = {}
        for (mode, nc, nd), count in states.items():
            options = [((STANDBY, nc, nd), 1)]
            for target, used, key in ((CHARGE, nc, 1), (DISCHARGE, nd, 2)):
                if mode == target:
                    options.append(((target, nc, nd), 1 if hold else k))
                elif used < cap:
                    bumped = (target, nc + 1, nd) if key == 1 else (target, nc, nd + 1)
                    options.append((bumped, k))
            for state, ways in options:
                if ways:
                    nxt[state] = nxt.get(state, 0) + count * ways
        states = nxt
    return sum(states.values())


@dataclass(frozen=True)
class _Option:
    mode: int
    level: float
    cost: float
    dsoc: float


def _step_options(dinst: DiscretizedInstance) -> List[List[_Option]]:
    """Grid-feasible options of every step with their objective cost and SOC change."""
    inst = dinst.instance
    h, ess, w = inst.horizon, inst.ess, inst.weights
    dt = h.step_hours
    prices = price_series(inst.tariff, h)
    feed_in = feed_in_series(inst.feed_in, h)
    carbon = inst.carbon.series(h)
    sink = inst.carbon.sink_price
    pv, load = inst.pv.as_array(), inst.load.as_array()
    limit = inst.grid.transformer_rating * (1.0 + 1e-12)

    per_step: List[List[_Option]] = []
    for t in range(h.total_steps):
        k_dn = dt * (w.alpha1 * prices[t] + w.alpha2 * carbon[t] * sink)
        k_up = dt * (w.alpha3 - w.alpha1) * feed_in[t]
        k_out = -dt * w.alpha3 * feed_in[t]
        candidates = [(STANDBY, 0.0)] + [(CHARGE, v) for v in dinst.active_levels] \
            + [(DISCHARGE, v) for v in dinst.active_levels]
        options = []
        for mode, level in candidates:
            p_in = level if mode == CHARGE else 0.0
            p_out = level if mode == DISCHARGE else 0.0
            net = load[t] + p_in - pv[t] - p_out
            if abs(net) > limit:
                continue
            cost = k_dn * max(net, 0.0) + k_up * max(-net, 0.0) + k_out * p_out
            dsoc = (ess.eta_c * p_in - p_out / ess.eta_d) * dt / ess.capacity
            options.append(_Option(mode, level, cost, dsoc))
        per_step.append(options)
    return per_step


def brute_force_optimal(dinst: DiscretizedInstance,
                        max_combinations: int = MAX_COMBINATIONS) -> Tuple[Schedule, float]:
    """
    Cheapest feasible schedule over the discretized modes.

    Returns:
        The schedule and its weighted objective in $

    Raises:
        OracleSizeError: if more than max_combinations sequences exist
        InfeasibleError: if no sequence is feasible
    """
    combinations = count_sequences(dinst)
    if combinations > max_combinations:
        raise OracleSizeError(f"{combinations} candidate sequences exceed the limit of {max_combinations}")

    inst = dinst.instance
    ess, h = inst.ess, inst.horizon
    n, n_day = h.total_steps, h.steps_per_day
    hold = inst.flags.constant_power_mode
    terminal = inst.flags.terminal_soc_equals_initial
    options = _step_options(dinst)
    top = max(dinst.power_levels)
    max_gain = ess.eta_c * top * h.step_hours / ess.capacity
    max_loss = top * h.step_hours / (ess.eta_d * ess.capacity)

    best_cost = math.inf
    best_path: Optional[List[_Option]] = None
    path: List[_Option] = []

    def descend(t: int, soc: float, prev: _Option, nc: int, nd: int, cost: float) -> None:
        nonlocal best_cost, best_path
        if terminal:
            remaining = n - t
            if soc + max_gain * remaining < ess.soc_init - SOC_TOL or soc - max_loss * remaining > ess.soc_init + SOC_TOL:
                return
        if t == n:
            if cost < best_cost:
                best_cost, best_path = cost, list(path)
            return
        if t % n_day == 0:
            nc = nd = 0
        for option in options[t]:
            started = option.mode != STANDBY and option.mode != prev.mode
            if option.mode != STANDBY and not started and hold and option.level != prev.level:
                continue
            c_starts = nc + (started and option.mode == CHARGE)
            d_starts = nd + (started and option.mode == DISCHARGE)
            if c_starts > ess.max_starts or d_starts > ess.max_starts:
                continue
            next_soc = soc + option.dsoc
            if next_soc < ess.soc_min - SOC_TOL or next_soc > ess.soc_max + SOC_TOL:
                continue
            path.append(option)
            descend(t + 1, next_soc, option, c_starts, d_starts, cost + option.cost)
            path.pop()

    descend(0, ess.soc_init, _Option(STANDBY, 0.0, 0.0, 0.0), 0, 0, 0.0)
    if best_path is None:
        raise InfeasibleError("no feasible mode sequence")

    charge = [int(o.mode == CHARGE) for o in best_path]
    discharge = [int(o.mode == DISCHARGE) for o in best_path]
    p_in = np.array([o.level if o.mode == CHARGE else 0.0 for o in best_path])
    p_out = np.array([o.level if o.mode == DISCHARGE else 0.0 for o in best_path])
    soc = np.clip(soc_trajectory(ess, h, p_in, p_out, charge, discharge), ess.soc_min, ess.soc_max)
    net = inst.load.as_array() + p_in - inst.pv.as_array() - p_out
    schedule = Schedule(h, charge, discharge, p_in, p_out, np.maximum(net, 0.0), np.maximum(-net, 0.0), soc)
    logger.debug(f"oracle: {combinations} candidate sequences, optimum {best_cost:.6f}")
    return schedule, best_cost


def restricted_model(dinst: DiscretizedInstance) -> Tuple[Model, VarMap]:
    """
    The scheduling MILP with battery powers restricted to the level grid.

    One binary per (step, nonzero level, direction) selects the level:
    p_in = sum(level * z) and sum(z) = C, likewise for discharge.
    """
    model, vm = build_model(dinst.instance)
    for t in range(dinst.instance.horizon.total_steps):
        for label, power, state in (("zc", vm.p_in, vm.c), ("zd", vm.p_out, vm.d)):
            picks = [model.add_variable(VarKind.BINARY, 0.0, 1.0, f"{label}_{t}_{k}")
                     for k in range(len(dinst.active_levels))]
            expr = {power[t]: 1.0}
            expr.update({z: -level for z, level in zip(picks, dinst.active_levels)})
            model.add_constraint(expr, Sense.EQ, 0.0, f"{label}_level_{t}")
            select = {z: 1.0 for z in picks}
            select[state[t]] = -1.0
            model.add_constraint(select, Sense.EQ, 0.0, f"{label}_pick_{t}")
    return model, vm


@dataclass(frozen=True)
class CertificationReport:
    """Objectives of the oracle, the level-restricted MILP and the continuous MILP."""

    oracle_objective: float
    restricted_objective: float
    continuous_objective: float
    tolerance: float
    oracle_schedule: Schedule = field(repr=False)
    restricted_schedule: Schedule = field(repr=False)
    continuous_schedule: Schedule = field(repr=False)

    @property
    def restricted_matches(self) -> bool:
        return abs(self.restricted_objective - self.oracle_objective) <= self.tolerance

    @property
    def continuous_bounded(self) -> bool:
        return self.continuous_objective <= self.oracle_objective + self.tolerance

    @property
    def passed(self) -> bool:
        return self.restricted_matches and self.continuous_bounded

    def describe(self) -> str:
        lines = [
            f"oracle objective      {self.oracle_objective!r}",
            f"restricted objective  {self.restricted_objective!r} "
            f"({'ok' if self.restricted_matches else 'MISMATCH'})",
            f"continuous objective  {self.continuous_objective!r} "
            f"({'ok' if self.continuous_bounded else 'ABOVE ORACLE'})",
            f"tolerance             {self.tolerance!r}",
        ]
        if not self.restricted_matches:
            for label, schedule in (("oracle", self.oracle_schedule), ("restricted", self.restricted_schedule)):
                lines.append(f"{label} state  {list(schedule.state)}")
                lines.append(f"{label} p_in   {list(schedule.p_in)}")
                lines.append(f"{label} p_out  {list(schedule.p_out)}")
        return "\n".join(lines)


def certification_config() -> SolverConfig:
    """Solver settings tight enough for 1e-6 agreement with the oracle."""
    return SolverConfig(relative_gap=1e-12, absolute_gap=1e-9)


def certify(dinst: DiscretizedInstance, solver_config: Optional[SolverConfig] = None,
            tolerance: float = 1e-6) -> CertificationReport:
    """
    Check the MILP solver against the oracle.

    `tolerance` is relative to max(1, |oracle objective|).

    Raises:
        CertificationError: with the full report when a check fails
        OracleSizeError: if the instance is too large to enumerate
    """
    config = solver_config or certification_config()
    inst = dinst.instance
    oracle_schedule, oracle_objective = brute_force_optimal(dinst)

    model, vm = restricted_model(dinst)
    restricted = solve(model, config)
    if not restricted.is_optimal:
        raise CertificationError(f"restricted MILP ended with status {restricted.status.value}; "
                                 f"oracle objective {oracle_objective!r}")
    restricted_schedule = extract_schedule(restricted, vm, inst)

    model, vm = build_model(inst)
    continuous = solve(model, config)
    if not continuous.is_optimal:
        raise CertificationError(f"continuous MILP ended with status {continuous.status.value}")
    continuous_schedule = extract_schedule(continuous, vm, inst)

    report = CertificationReport(
        oracle_objective, restricted.objective_value, continuous.objective_value,
        tolerance * max(1.0, abs(oracle_objective)),
        oracle_schedule, restricted_schedule, continuous_schedule,
    )
    if not report.passed:
        raise CertificationError("solver disagrees with the oracle\n" + report.describe())
    logger.debug(f"certified: oracle {oracle_objective:.6f}, continuous {continuous.objective_value:.6f}")
    return report


def random_instance(seed: int, steps_per_day: int = 12, levels: Optional[Sequence[float]] = None,
                    constant_power_mode: bool = True) -> DiscretizedInstance:
    """
    Seeded one-day instance on the smaller case-study site.

    PV follows the 13:00 bell at a random fraction of the installed
    capacity, load is a random level with 10 % noise; weights, start cap and
    city are drawn as well.
    """
    rng = np.random.default_rng(seed)
    site = PRESETS["B"]
    horizon = Horizon(1, steps_per_day)
    hours = np.array([horizon.clock_hour(t) for t in range(horizon.total_steps)])
    pv = site.pv_capacity * rng.uniform(0.5, 1.0) * pv_shape(hours)
    load = np.maximum(0.0, rng.uniform(300.0, 1500.0) * (1.0 + 0.1 * rng.standard_normal(horizon.total_steps)))
    alphas = rng.dirichlet(np.ones(3))
    ess = EssParams(capacity=site.ess.capacity, rated_power=site.ess.rated_power,
                    eta_c=site.ess.eta_c, eta_d=site.ess.eta_d,
                    max_starts=int(rng.integers(1, 3)))
    city = str(rng.choice(sorted(CITY_CARBON_FACTORS)))
    instance = Instance(
        horizon,
        Profile(ProfileKind.PV, pv, horizon),
        Profile(ProfileKind.LOAD, load, horizon),
        ess=ess,
        grid=site.grid,
        carbon=CarbonModel.for_city(city),
        weights=Weights(*(float(a) for a in alphas)),
        flags=InstanceFlags(constant_power_mode=constant_power_mode),
    )
    if levels is None:
        return DiscretizedInstance.halves(instance)
    return DiscretizedInstance(instance, tuple(levels))
