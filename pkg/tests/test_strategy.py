#!/usr/bin/env python3
"""
Unit tests for the essopt baseline strategy and scenario studies.
"""

import sys
import os
import unittest

# Add the parent directory to the path so we can import the package
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from essopt.device import EssParams, count_starts, daily_starts
from essopt.errors import ConfigError, TariffError
from essopt.fixtures import generate_week
from essopt.formulation import Instance, Weights, objective_components, optimize
from essopt.milp import SolverConfig
from essopt.strategy import (
    ABSORPTION_WEIGHTS, _argmin_window, _map, _price_windows, baseline_schedule, bill_comparison,
    centered_windows, hourly_windows, permutation_weights, reduction_percent, reop_policy,
    reop_window_sweep, scenario_weights, weight_sweep
)
from essopt.tariff import FeedInPolicy, TariffBand, TouTariff
from essopt.timeseries import Horizon, Profile, ProfileKind

EXACT = SolverConfig(relative_gap=1e-9)


def flat_load_instance(steps_per_day=24, days=1, load=3500.0, **kwargs):
    h = Horizon(days, steps_per_day)
    return Instance(h, Profile(ProfileKind.PV, [0.0] * h.total_steps, h),
                    Profile(ProfileKind.LOAD, [load] * h.total_steps, h), **kwargs)


def fixture_instance(days=2, steps_per_day=12):
    pv, load = generate_week(seed=3, steps_per_day=steps_per_day, days=days)
    return Instance(pv.horizon, pv, load)


class TestBaseline(unittest.TestCase):
    """Tests for the peak-valley baseline."""

    def test_price_windows(self):
        windows = _price_windows(flat_load_instance())
        self.assertEqual([(w.start, w.end, w.peak) for w in windows],
                         [(0, 8, False), (8, 11, True), (11, 17, False), (17, 22, True), (22, 24, False)])

    def test_two_cycles_per_day(self):
        inst = flat_load_instance()
        schedule = baseline_schedule(inst)
        self.assertEqual(count_starts(schedule.charge), 2)
        self.assertEqual(count_starts(schedule.discharge), 2)
        self.assertAlmostEqual(schedule.soc[7], inst.ess.soc_max)
        self.assertAlmostEqual(schedule.soc[10], inst.ess.soc_min)
        # Evening flat band has no later peak, so the battery idles
        self.assertEqual(schedule.state[22:], (0, 0))
        self.assertAlmostEqual(schedule.p_in[0], 7200 / 0.88 / 8)
        self.assertEqual(inst.validate(schedule), [])

    def test_start_cap_one(self):
        inst = flat_load_instance(ess=EssParams(max_starts=1))
        schedule = baseline_schedule(inst)
        self.assertEqual(count_starts(schedule.charge), 1)
        self.assertEqual(count_starts(schedule.discharge), 1)

    def test_multi_day(self):
        inst = flat_load_instance(steps_per_day=12, days=3)
        schedule = baseline_schedule(inst)
        self.assertEqual(daily_starts(schedule.charge, inst.horizon), [2, 2, 2])
        self.assertEqual(inst.validate(schedule), [])

    def test_flat_tariff_rejected(self):
        inst = flat_load_instance(tariff=TouTariff((TariffBand(0, 24, 0.5),)))
        with self.assertRaises(TariffError):
            baseline_schedule(inst)


class TestBillComparison(unittest.TestCase):
    """Tests for the daily bill comparison."""

    def test_reduction_percent(self):
        self.assertAlmostEqual(reduction_percent(100.0, 90.0), 10.0)
        self.assertEqual(reduction_percent(0.0, -5.0), 0.0)
        self.assertEqual(reduction_percent(-3.0, -5.0), 0.0)

    def test_optimizer_never_worse(self):
        inst = fixture_instance()
        comparison = bill_comparison(inst, EXACT)
        self.assertEqual([d.day for d in comparison.days], [0, 1])
        for day in comparison.days:
            self.assertLessEqual(day.optimized_cost, day.baseline_cost + 1e-6 * max(1.0, abs(day.baseline_cost)))
        summary = comparison.summary()
        self.assertIn(summary["max_reduction_day"], (0, 1))
        self.assertGreaterEqual(summary["max_reduction_percent"], summary["min_reduction_percent"])
        self.assertAlmostEqual(comparison.baseline_total,
                               sum(objective_components(baseline_schedule(d), d).f1 for d in inst.days()))

    def test_reduction_identity(self):
        inst = fixture_instance(days=1)
        day = bill_comparison(inst, EXACT).days[0]
        economic = inst.with_weights(Weights(1.0, 0.0, 0.0))
        self.assertAlmostEqual(day.baseline_cost, objective_components(baseline_schedule(economic), economic).f1)
        self.assertAlmostEqual(day.optimized_cost, optimize(economic, EXACT).report.f1)
        self.assertGreater(day.baseline_cost, 0.0)
        self.assertAlmostEqual(day.reduction_percent,
                               100.0 * (day.baseline_cost - day.optimized_cost) / day.baseline_cost)


class TestWeightSweep(unittest.TestCase):
    """Tests for weight sets and the weight sweep."""

    def test_scenarios(self):
        scenarios = scenario_weights()
        self.assertEqual(len(scenarios), 6)
        self.assertEqual(scenarios[0].as_tuple(), (0.7, 0.1, 0.2))
        self.assertEqual(scenarios[-1].as_tuple(), (0.2, 0.1, 0.7))

    def test_permutations(self):
        self.assertEqual(len(permutation_weights((0.7, 0.2, 0.1))), 6)
        self.assertEqual([w.as_tuple() for w in permutation_weights((0.5, 0.5, 0.0))],
                         [(0.5, 0.5, 0.0), (0.5, 0.0, 0.5), (0.0, 0.5, 0.5)])

    def test_rows_in_input_order(self):
        inst = fixture_instance(days=1)
        weights = [Weights(1, 0, 0), Weights(0, 0, 1), Weights(0.2, 0.7, 0.1)]
        rows = weight_sweep(inst, weights, EXACT)
        self.assertEqual([r.weights for r in rows], weights)
        self.assertTrue(all(r.ok for r in rows))
        # The economic optimum has the lowest bill of the three
        self.assertLessEqual(rows[0].report.f1, min(r.report.f1 for r in rows) + 1e-6)

    def test_pool_keeps_order(self):
        self.assertEqual(_map(abs, [-3, 1, -2, 5], workers=2), [3, 1, 2, 5])


class TestReopSweep(unittest.TestCase):
    """Tests for REOP windows and the REOP sweep."""

    def test_window_generators(self):
        windows = centered_windows()
        self.assertEqual(len(windows), 12)
        self.assertEqual(windows[0], (12.75, 13.25))
        self.assertEqual(windows[4], (11.75, 14.25))
        self.assertEqual(windows[-1], (10.0, 16.0))
        self.assertEqual(hourly_windows(), [(12.0, 14.0), (11.0, 15.0), (10.0, 16.0), (9.0, 17.0)])

    def test_reop_policy(self):
        policy = reop_policy(FeedInPolicy(), (11.0, 15.0))
        self.assertEqual(policy.rate_at_hour(9.0), 0.0)
        self.assertAlmostEqual(policy.rate_at_hour(13.0), 0.2703)

    def test_argmin_ties_go_to_earliest(self):
        self.assertEqual(_argmin_window([5.0, 3.0, 3.0, 4.0]), 1)
        self.assertEqual(_argmin_window([2.0, 2.0 + 1e-9]), 0)

    def test_empty_windows(self):
        with self.assertRaises(ConfigError):
            reop_window_sweep(fixture_instance(days=1), [])

    def test_sweep_shape(self):
        inst = fixture_instance(days=2)
        windows = hourly_windows()[:2]
        result = reop_window_sweep(inst, windows, EXACT)
        self.assertEqual(len(result.exports), 2)
        self.assertEqual(len(result.exports[0]), 2)
        self.assertAlmostEqual(sum(result.histogram), 100.0)
        for day, best in enumerate(result.best):
            self.assertAlmostEqual(min(result.exports[day]), result.exports[day][best], delta=1e-6)
        self.assertEqual(ABSORPTION_WEIGHTS.as_tuple(), (0.0, 0.0, 1.0))


if __name__ == "__main__":
    unittest.main()
