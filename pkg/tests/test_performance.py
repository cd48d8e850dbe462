#!/usr/bin/env python3
"""
Full-resolution checks for essopt on the synthetic week of 96-step days.
"""

import sys
import os
import time
import unittest

import numpy as np

# Add the parent directory to the path so we can import the package
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from essopt.branch_and_bound import solve
from essopt.device import EssParams, daily_starts
from essopt.fixtures import generate_week
from essopt.formulation import Instance, Weights, build_model, optimize
from essopt.lpformat import read_lp, write_lp
from essopt.milp import SolverConfig
from essopt.oracle import certify, random_instance
from essopt.strategy import bill_comparison, centered_windows, reop_window_sweep, scenario_weights, weight_sweep

CONFIG = SolverConfig(relative_gap=1e-6)


def week(days=7, **kwargs):
    pv, load = generate_week(seed=0, steps_per_day=96, days=days)
    return Instance(pv.horizon, pv, load, **kwargs)


def runs(states):
    """(start, end) of each maximal block of ones."""
    blocks, start = [], None
    for t, s in enumerate(list(states) + [0]):
        if s and start is None:
            start = t
        elif not s and start is not None:
            blocks.append((start, t))
            start = None
    return blocks


class TestFullResolution(unittest.TestCase):
    """Checks on 96-step days of the synthetic week."""

    def assert_physical(self, schedule, instance):
        limit = instance.grid.transformer_rating
        self.assertEqual(instance.validate(schedule), [])
        p_dn, p_up = np.array(schedule.p_dn), np.array(schedule.p_up)
        self.assertTrue(np.all(p_dn * p_up <= 1e-6 * limit ** 2))
        self.assertTrue(all(c + d <= 1 for c, d in zip(schedule.charge, schedule.discharge)))
        soc = np.array(schedule.soc)
        self.assertTrue(np.all(soc >= instance.ess.soc_min - 1e-9))
        self.assertTrue(np.all(soc <= instance.ess.soc_max + 1e-9))

    def test_weight_dominance(self):
        inst = week(days=1)
        rows = weight_sweep(inst, scenario_weights(), CONFIG)
        self.assertTrue(all(r.ok for r in rows))
        columns = [[r.report.f1 for r in rows], [r.report.f2 for r in rows], [r.report.f3 for r in rows]]
        for i in range(3):
            top = max(r.weights.as_tuple()[i] for r in rows)
            favoured = [columns[i][k] for k, r in enumerate(rows) if r.weights.as_tuple()[i] == top]
            self.assertLessEqual(min(favoured), min(columns[i]) + 1e-6 * max(1.0, abs(min(columns[i]))))

    def test_bill_reduction(self):
        comparison = bill_comparison(week(), CONFIG)
        for day in comparison.days:
            self.assertLessEqual(day.optimized_cost, day.baseline_cost + 1e-6 * max(1.0, abs(day.baseline_cost)))
            self.assertGreaterEqual(day.reduction_percent, 5.0)

    def test_start_cap(self):
        objectives = {}
        for cap in (1, 2):
            inst = week(days=1, ess=EssParams(max_starts=cap))
            result = optimize(inst, CONFIG)
            self.assert_physical(result.schedule, inst)
            self.assertLessEqual(max(daily_starts(result.schedule.charge, inst.horizon)), cap)
            self.assertLessEqual(max(daily_starts(result.schedule.discharge, inst.horizon)), cap)
            objectives[cap] = result.report.f
        self.assertGreaterEqual(objectives[1], objectives[2] - 1e-6 * max(1.0, abs(objectives[2])))

    def test_constant_power(self):
        inst = week(days=1, weights=Weights(1, 0, 0))
        schedule = optimize(inst, CONFIG).schedule
        self.assert_physical(schedule, inst)
        for states, power in ((schedule.charge, schedule.p_in), (schedule.discharge, schedule.p_out)):
            for start, end in runs(states):
                block = np.array(power[start:end])
                self.assertLessEqual(float(np.max(np.abs(np.diff(block)), initial=0.0)), 1e-6)

    def test_lp_round_trip(self):
        model, _ = build_model(week(days=1))
        direct = solve(model, CONFIG)
        reread = solve(read_lp(write_lp(model)), CONFIG)
        self.assertTrue(direct.is_optimal)
        self.assertAlmostEqual(reread.objective_value / direct.objective_value, 1.0, delta=1e-9)

    def test_reop_sweep(self):
        started = time.perf_counter()
        result = reop_window_sweep(week(), centered_windows(), CONFIG)
        elapsed = time.perf_counter() - started
        self.assertAlmostEqual(sum(result.histogram), 100.0)
        for best in result.best:
            start, end = result.windows[best]
            self.assertTrue(start <= 13.0 <= end)
        self.assertLess(elapsed, 300.0)


class TestCertificationSuite(unittest.TestCase):
    """Twenty seeded small instances against exhaustive search."""

    def test_twenty_instances(self):
        started = time.perf_counter()
        for seed in range(20):
            with self.subTest(seed=seed):
                dinst = random_instance(seed)
                report = certify(dinst)
                self.assertTrue(report.passed)
                for schedule in (report.oracle_schedule, report.restricted_schedule, report.continuous_schedule):
                    self.assertEqual(dinst.instance.validate(schedule), [])
        self.assertLess(time.perf_counter() - started, 60.0)


if __name__ == "__main__":
    unittest.main()
