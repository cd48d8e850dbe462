"""
Rule-based baseline and scenario studies for essopt.

The baseline is the classic peak-valley arbitrage: charge in the cheaper
windows that precede a peak, discharge in the peaks, each at the constant
power that just reaches the SOC target. The studies compare it with the
optimizer (bill comparison) and sweep objective weights and REOP windows.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import permutations
from typing import Callable, List, Optional, Sequence, Tuple, TypeVar

import numpy as np

from .device import Schedule, soc_trajectory
from .errors import ConfigError, EssoptError, ScheduleError, TariffError
from .formulation import Instance, ObjectiveReport, Weights, objective_components, optimize
from .logging import get_logger
from .milp import SolverConfig
from .tariff import FeedInPolicy, price_series

logger = get_logger("essopt.strategy")

ECONOMIC_WEIGHTS = Weights(1.0, 0.0, 0.0)
ABSORPTION_WEIGHTS = Weights(0.0, 0.0, 1.0)

# The six weight scenarios, in the order the case study reports them
WEIGHT_SCENARIOS: Tuple[Tuple[float, float, float], ...] = (
    (0.7, 0.1, 0.2), (0.7, 0.2, 0.1), (0.2, 0.7, 0.1),
    (0.1, 0.7, 0.2), (0.1, 0.2, 0.7), (0.2, 0.1, 0.7),
)

# Exports closer than this (kWh) count as a tie
EXPORT_TIE_KWH = 1e-6

T = TypeVar("T")
R = TypeVar("R")


def _map(fn: Callable[[T], R], tasks: Sequence[T], workers: int) -> List[R]:
    """Run tasks in order, in a process pool when workers > 1."""
    if workers <= 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


# ---------------- BASELINE ---------------------
@dataclass(frozen=True)
class _Window:
    start: int
    end: int
    peak: bool


def _price_windows(instance: Instance) -> List[_Window]:
    """Split one day into alternating peak / non-peak windows in clock order."""
    prices = price_series(instance.tariff, instance.horizon.single_day())
    high = max(prices)
    if high <= min(prices):
        raise TariffError("tariff has no distinct peak band; the baseline needs peak and valley prices",
                          "tariff.bands")
    windows: List[_Window] = []
    for t, price in enumerate(prices):
        peak = price >= high
        if windows and windows[-1].peak == peak:
            windows[-1] = _Window(windows[-1].start, t + 1, peak)
        else:
            windows.append(_Window(t, t + 1, peak))
    return windows


def baseline_schedule(instance: Instance) -> Schedule:
    """
    Deterministic peak-valley arbitrage schedule.

    Each non-peak window followed later in the day by a peak charges toward
    soc_max, each peak window discharges toward soc_min, both at one
    constant power capped by the rated power and by transformer headroom.
    At most max_starts charge and discharge runs are used per day.

    Raises:
        TariffError: if the tariff has no distinct peak
        ScheduleError: if the resulting schedule is infeasible
    """
    ess, grid, h = instance.ess, instance.grid, instance.horizon
    dt, n_day = h.step_hours, h.steps_per_day
    pv, load = instance.pv.as_array(), instance.load.as_array()
    windows = _price_windows(instance)

    charge = np.zeros(h.total_steps, dtype=int)
    discharge = np.zeros(h.total_steps, dtype=int)
    p_in = np.zeros(h.total_steps)
    p_out = np.zeros(h.total_steps)
    soc = ess.soc_init
    carry = 0  # action still running at the end of the previous day

    for day in range(h.days):
        offset = day * n_day
        charges = discharges = 0
        last = 0
        for i, window in enumerate(windows):
            steps = np.arange(offset + window.start, offset + window.end)
            hours = len(steps) * dt
            net = load[steps] - pv[steps]
            action, power = 0, 0.0
            if window.peak and discharges < ess.max_starts:
                headroom = float(np.min(grid.transformer_rating + net))
                energy = (soc - ess.soc_min) * ess.capacity * ess.eta_d
                power = min(ess.rated_power, energy / hours, headroom)
                action = -1
            elif not window.peak and charges < ess.max_starts and any(w.peak for w in windows[i + 1:]):
                headroom = float(np.min(grid.transformer_rating - net))
                energy = (ess.soc_max - soc) * ess.capacity / ess.eta_c
                power = min(ess.rated_power, energy / hours, headroom)
                action = 1
            # A run continuing across midnight would merge two blocks
            if window.start == 0 and action == carry:
                action = 0
            if action == 0 or power < ess.min_active_power:
                continue
            if action == 1:
                charge[steps], p_in[steps] = 1, power
                soc += ess.eta_c * power * hours / ess.capacity
                charges += 1
            else:
                discharge[steps], p_out[steps] = 1, power
                soc -= power * hours / (ess.eta_d * ess.capacity)
                discharges += 1
            if window.end == n_day:
                last = action
        carry = last

    trajectory = np.clip(soc_trajectory(ess, h, p_in, p_out, charge, discharge), ess.soc_min, ess.soc_max)
    net = load + p_in - pv - p_out
    schedule = Schedule(h, charge, discharge, p_in, p_out, np.maximum(net, 0.0), np.maximum(-net, 0.0),
                        trajectory)
    violations = instance.validate(schedule)
    if violations:
        detail = "; ".join(str(v) for v in violations[:5])
        raise ScheduleError(f"baseline schedule is infeasible: {detail}")
    return schedule


# ---------------- BILL COMPARISON --------------
@dataclass(frozen=True)
class DayBill:
    day: int
    baseline_cost: float
    optimized_cost: float
    reduction_percent: float


@dataclass(frozen=True)
class BillComparison:
    """Per-day energy bills of the baseline and the economic optimum."""

    days: Tuple[DayBill, ...]

    @property
    def average_reduction(self) -> float:
        return float(np.mean([d.reduction_percent for d in self.days])) if self.days else 0.0

    @property
    def max_reduction(self) -> DayBill:
        return max(self.days, key=lambda d: d.reduction_percent)

    @property
    def min_reduction(self) -> DayBill:
        return min(self.days, key=lambda d: d.reduction_percent)

    @property
    def baseline_total(self) -> float:
        return sum(d.baseline_cost for d in self.days)

    @property
    def optimized_total(self) -> float:
        return sum(d.optimized_cost for d in self.days)

    def rows(self) -> List[Tuple[int, float, float, float]]:
        return [(d.day, d.baseline_cost, d.optimized_cost, d.reduction_percent) for d in self.days]

    def summary(self) -> dict:
        return {
            "average_reduction_percent": self.average_reduction,
            "max_reduction_percent": self.max_reduction.reduction_percent,
            "max_reduction_day": self.max_reduction.day,
            "min_reduction_percent": self.min_reduction.reduction_percent,
            "min_reduction_day": self.min_reduction.day,
            "baseline_total": self.baseline_total,
            "optimized_total": self.optimized_total,
        }


def reduction_percent(baseline: float, optimized: float) -> float:
    """100*(baseline - optimized)/baseline, or 0 when the baseline bill is not positive."""
    if baseline <= 0:
        return 0.0
    return 100.0 * (baseline - optimized) / baseline


def _bill_day(task: Tuple[int, Instance, Optional[SolverConfig]]) -> DayBill:
    day, instance, config = task
    baseline = objective_components(baseline_schedule(instance), instance).f1
    optimized = optimize(instance, config).report.f1
    if optimized > baseline + 1e-6 * max(1.0, abs(baseline)):
        logger.warning(f"day {day}: optimized bill {optimized:.4f} exceeds baseline {baseline:.4f}")
    return DayBill(day, baseline, optimized, reduction_percent(baseline, optimized))


def bill_comparison(instance: Instance, config: Optional[SolverConfig] = None, workers: int = 1) -> BillComparison:
    """
    Compare the baseline bill with the economic optimum, one day at a time.

    Both legs use weights (1, 0, 0) and every day starts from soc_init.
    """
    tasks = [(d, day.with_weights(ECONOMIC_WEIGHTS), config) for d, day in enumerate(instance.days())]
    result = BillComparison(tuple(_map(_bill_day, tasks, workers)))
    logger.info(f"bill comparison over {len(result.days)} day(s): "
                f"average reduction {result.average_reduction:.4f}%")
    return result


# ---------------- WEIGHT SWEEP -----------------
def scenario_weights() -> List[Weights]:
    """The six case-study weight scenarios."""
    return [Weights(*w) for w in WEIGHT_SCENARIOS]


def permutation_weights(values: Sequence[float]) -> List[Weights]:
    """Distinct permutations of `values` as weight sets, first-seen order."""
    seen: List[Tuple[float, ...]] = []
    for perm in permutations(values):
        if perm not in seen:
            seen.append(perm)
    return [Weights(*w) for w in seen]


@dataclass(frozen=True)
class SweepRow:
    """One weight set and its optimum; `error` is set when the solve failed."""

    weights: Weights
    report: Optional[ObjectiveReport]
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.report is not None


def _sweep_row(task: Tuple[Instance, Optional[SolverConfig]]) -> SweepRow:
    instance, config = task
    try:
        return SweepRow(instance.weights, optimize(instance, config).report)
    except EssoptError as e:
        logger.warning(f"weights {instance.weights}: {e}")
        return SweepRow(instance.weights, None, str(e))


def weight_sweep(instance: Instance, weight_sets: Sequence[Weights], config: Optional[SolverConfig] = None,
                 workers: int = 1) -> List[SweepRow]:
    """One optimization per weight set, rows in input order."""
    tasks = [(instance.with_weights(w), config) for w in weight_sets]
    return _map(_sweep_row, tasks, workers)


# ---------------- REOP SWEEP -------------------
def centered_windows(center: float = 13.0, step: float = 0.25, count: int = 12) -> List[Tuple[float, float]]:
    """Windows [center - i*step, center + i*step] for i = 1..count."""
    return [(center - i * step, center + i * step) for i in range(1, count + 1)]


def hourly_windows() -> List[Tuple[float, float]]:
    """[12, 14], [11, 15], [10, 16], [9, 17]."""
    return centered_windows(13.0, 1.0, 4)


def reop_policy(base: FeedInPolicy, window: Tuple[float, float]) -> FeedInPolicy:
    """No revenue outside the window, the REOP rate negated inside it."""
    return FeedInPolicy(normal_rate=0.0, reop_rate=-base.reop_rate, reop_start=window[0], reop_end=window[1])


@dataclass(frozen=True)
class ReopSweepResult:
    """
    Grid export per (day, window).

    Attributes:
        windows: The REOP windows, in input order
        exports: exports[day][window] in kWh
        best: Per-day index of the window with the least export
        histogram: Percentage of days each window is best
    """

    windows: Tuple[Tuple[float, float], ...]
    exports: Tuple[Tuple[float, ...], ...]
    best: Tuple[int, ...]
    histogram: Tuple[float, ...]


def _argmin_window(exports: Sequence[float]) -> int:
    best = 0
    for i, value in enumerate(exports):
        if value < exports[best] - EXPORT_TIE_KWH:
            best = i
    return best


def _reop_cell(task: Tuple[Instance, Optional[SolverConfig]]) -> float:
    instance, config = task
    return optimize(instance, config).schedule.export_energy()


def reop_window_sweep(instance: Instance, windows: Sequence[Tuple[float, float]],
                      config: Optional[SolverConfig] = None, workers: int = 1) -> ReopSweepResult:
    """
    Optimize every day under every REOP window with weights (0, 0, 1).

    Raises:
        ConfigError: for an empty window list
    """
    if not windows:
        raise ConfigError("empty REOP window list", "sweep.reop_windows")
    windows = tuple((float(a), float(b)) for a, b in windows)
    days = instance.days()
    tasks = [(day.with_weights(ABSORPTION_WEIGHTS).with_feed_in(reop_policy(instance.feed_in, w)), config)
             for day in days for w in windows]
    flat = _map(_reop_cell, tasks, workers)
    k = len(windows)
    exports = tuple(tuple(flat[d * k:(d + 1) * k]) for d in range(len(days)))
    best = tuple(_argmin_window(row) for row in exports)
    histogram = tuple(100.0 * best.count(i) / len(best) for i in range(k))
    logger.info(f"REOP sweep: {len(days)} day(s) x {k} windows")
    return ReopSweepResult(windows, exports, best, histogram)
