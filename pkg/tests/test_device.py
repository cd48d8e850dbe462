#!/usr/bin/env python3
"""
Unit tests for essopt battery parameters, schedules and the schedule validator.
"""

import sys
import os
import dataclasses
import unittest

import numpy as np

# Add the parent directory to the path so we can import the package
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from essopt.device import (
    ConstraintKind, EssParams, GridParams, Schedule, count_starts, daily_starts, preset,
    soc_trajectory, validate_schedule
)
from essopt.errors import ParameterError, ProfileError, ScheduleError
from essopt.timeseries import Horizon, Profile, ProfileKind

H4 = Horizon(1, 4)


def make_schedule(params=None, charge=(1, 0, 0, 0), discharge=(0, 0, 1, 0),
                  p_in=(1000.0, 0, 0, 0), p_out=(0, 0, 500.0, 0), load=2000.0):
    """A one-day, four-step schedule with grid flows taken from the balance."""
    params = params or EssParams()
    soc = soc_trajectory(params, H4, p_in, p_out, charge, discharge)
    net = np.array([load + c * pi - d * po for c, d, pi, po in zip(charge, discharge, p_in, p_out)])
    schedule = Schedule(H4, charge, discharge, p_in, p_out, np.maximum(net, 0), np.maximum(-net, 0), soc)
    pv = Profile(ProfileKind.PV, [0.0] * 4, H4)
    load_p = Profile(ProfileKind.LOAD, [load] * 4, H4)
    return schedule, pv, load_p


class TestEssParams(unittest.TestCase):
    """Tests for parameter validation and presets."""

    def test_defaults_are_user_a(self):
        p = EssParams()
        self.assertEqual((p.capacity, p.rated_power, p.soc_min, p.soc_max), (8000.0, 4000.0, 0.05, 0.95))
        self.assertEqual((p.eta_c, p.eta_d, p.max_starts), (0.88, 0.90, 2))

    def test_user_b_preset(self):
        b = preset("b")
        self.assertEqual(b.ess.capacity, 2000.0)
        self.assertEqual(b.ess.eta_c, 0.85)
        self.assertEqual(b.grid.transformer_rating, 6000.0)
        self.assertEqual(b.pv_capacity, 2000.0)
        with self.assertRaises(ParameterError):
            preset("C")

    def test_soc_order_names_field(self):
        with self.assertRaises(ParameterError) as ctx:
            EssParams(soc_min=0.9, soc_max=0.5, soc_init=0.6)
        self.assertEqual(ctx.exception.field, "ess.soc_min")

    def test_invalid_values(self):
        for changes in ({"capacity": 0}, {"eta_c": 0}, {"eta_d": 1.2}, {"soc_init": 0.99},
                        {"max_starts": -1}, {"max_starts": 1.5}, {"rated_power": float("nan")}):
            with self.assertRaises(ParameterError, msg=str(changes)):
                EssParams(**changes)
        with self.assertRaises(ParameterError):
            GridParams(0)


class TestSimulation(unittest.TestCase):
    """Tests for the SOC recursion and start counting."""

    def test_soc_trajectory(self):
        soc = soc_trajectory(EssParams(), H4, [1000, 0, 0, 0], [0, 0, 500, 0], [1, 0, 0, 0], [0, 0, 1, 0])
        np.testing.assert_allclose(soc, [0.71, 0.71, 0.71 - 500 / 0.9 * 6 / 8000, 0.71 - 500 / 0.9 * 6 / 8000])

    def test_idle_power_ignored_without_state(self):
        soc = soc_trajectory(EssParams(), H4, [1000] * 4, [0] * 4, [0] * 4, [0] * 4)
        np.testing.assert_allclose(soc, [0.05] * 4)

    def test_length_mismatch(self):
        with self.assertRaises(ScheduleError):
            soc_trajectory(EssParams(), H4, [0] * 3, [0] * 4, [0] * 4, [0] * 4)

    def test_count_starts(self):
        self.assertEqual(count_starts([0, 1, 1, 0, 1, 0]), 2)
        self.assertEqual(count_starts([1, 1, 0]), 1)
        self.assertEqual(count_starts([1, 1, 0], initial_prev=1), 0)
        self.assertEqual(count_starts([]), 0)
        with self.assertRaises(ScheduleError):
            count_starts([0, 2])

    def test_daily_starts_run_across_midnight(self):
        # The run beginning at the end of day 0 is not a new start on day 1
        self.assertEqual(daily_starts([0, 0, 0, 1, 1, 0, 1, 0], Horizon(2, 4)), [1, 1])


class TestSchedule(unittest.TestCase):
    """Tests for the Schedule container."""

    def test_state_signal(self):
        schedule, _, _ = make_schedule()
        self.assertEqual(schedule.state, (1, 0, -1, 0))

    def test_csv(self):
        schedule, _, _ = make_schedule()
        text = schedule.to_csv()
        self.assertTrue(text.startswith("step,C,D,p_in_kw,p_out_kw,p_dn_kw,p_up_kw,soc,state\n"))
        self.assertEqual(Schedule.from_csv(text, H4), schedule)
        with self.assertRaises(ProfileError):
            Schedule.from_csv(text, Horizon(1, 12))

    def test_csv_rejects_fractional_states(self):
        schedule, _, _ = make_schedule()
        lines = schedule.to_csv().splitlines()
        for column, field in ((0, "step"), (1, "C"), (2, "D")):
            cells = lines[2].split(",")
            cells[column] = "0.5" if column else "1.5"
            text = "\n".join(lines[:2] + [",".join(cells)] + lines[3:]) + "\n"
            with self.subTest(field=field):
                with self.assertRaises(ProfileError) as ctx:
                    Schedule.from_csv(text, H4)
                self.assertEqual(ctx.exception.field, field)
                self.assertEqual(ctx.exception.row, 1)
        cells = lines[1].split(",")
        cells[1] = "1.0"
        text = "\n".join(lines[:1] + [",".join(cells)] + lines[2:]) + "\n"
        self.assertEqual(Schedule.from_csv(text, H4).charge, schedule.charge)

    def test_export_energy(self):
        schedule, _, _ = make_schedule(load=0.0, charge=(0, 0, 0, 0), discharge=(0, 0, 1, 0),
                                       p_in=(0, 0, 0, 0), p_out=(0, 0, 500.0, 0))
        self.assertEqual(schedule.export_energy(), 500.0 * 6)

    def test_length_checked(self):
        with self.assertRaises(ScheduleError):
            Schedule(H4, [0] * 3, [0] * 4, [0] * 4, [0] * 4, [0] * 4, [0] * 4, [0.05] * 4)


class TestValidateSchedule(unittest.TestCase):
    """Tests for validate_schedule."""

    def kinds(self, schedule, pv, load, params=None, **kwargs):
        violations = validate_schedule(schedule, params or EssParams(), GridParams(), pv, load, **kwargs)
        return {v.constraint for v in violations}

    def test_feasible(self):
        schedule, pv, load = make_schedule()
        self.assertEqual(validate_schedule(schedule, EssParams(), GridParams(), pv, load), [])

    def test_both_states(self):
        schedule, pv, load = make_schedule()
        bad = dataclasses.replace(schedule, discharge=(1, 0, 1, 0))
        self.assertIn(ConstraintKind.STATE_EXCLUSIVITY, self.kinds(bad, pv, load))

    def test_power_above_rating(self):
        schedule, pv, load = make_schedule(p_in=(4500.0, 0, 0, 0))
        self.assertIn(ConstraintKind.POWER_BOUND, self.kinds(schedule, pv, load))

    def test_state_without_power(self):
        schedule, pv, load = make_schedule(charge=(1, 1, 0, 0), p_in=(1000.0, 0, 0, 0))
        violations = validate_schedule(schedule, EssParams(constant_power_mode=False), GridParams(), pv, load)
        self.assertEqual([(v.constraint, v.step) for v in violations], [(ConstraintKind.POWER_BOUND, 1)])
        self.assertIn("without charge power", str(violations[0]))
        self.assertAlmostEqual(EssParams().min_active_power, 0.4)

    def test_soc_bound(self):
        schedule, pv, load = make_schedule(p_out=(0, 0, 2000.0, 0))
        self.assertIn(ConstraintKind.SOC_BOUND, self.kinds(schedule, pv, load))

    def test_soc_recursion(self):
        schedule, pv, load = make_schedule()
        bad = dataclasses.replace(schedule, soc=(0.5,) * 4)
        self.assertIn(ConstraintKind.SOC_RECURSION, self.kinds(bad, pv, load))

    def test_start_cap(self):
        params = EssParams(max_starts=1)
        schedule, pv, load = make_schedule(params, charge=(1, 0, 1, 0), discharge=(0, 0, 0, 0),
                                           p_in=(500.0, 0, 500.0, 0), p_out=(0, 0, 0, 0))
        self.assertEqual(self.kinds(schedule, pv, load, params), {ConstraintKind.START_CAP})

    def test_constant_power(self):
        schedule, pv, load = make_schedule(charge=(1, 1, 0, 0), discharge=(0, 0, 0, 0),
                                           p_in=(500.0, 600.0, 0, 0), p_out=(0, 0, 0, 0))
        self.assertEqual(self.kinds(schedule, pv, load), {ConstraintKind.CONSTANT_POWER})
        free = EssParams(constant_power_mode=False)
        self.assertEqual(self.kinds(schedule, pv, load, free), set())

    def test_balance_and_exchange(self):
        schedule, pv, load = make_schedule()
        bad = dataclasses.replace(schedule, p_dn=(0.0, 2000.0, 1500.0, 2000.0))
        self.assertIn(ConstraintKind.BALANCE, self.kinds(bad, pv, load))
        both = dataclasses.replace(schedule, p_dn=tuple(v + 100 for v in schedule.p_dn), p_up=(100.0,) * 4)
        self.assertEqual(self.kinds(both, pv, load), {ConstraintKind.EXCHANGE})

    def test_terminal_soc(self):
        schedule, pv, load = make_schedule()
        self.assertEqual(self.kinds(schedule, pv, load, terminal_soc_equals_initial=True),
                         {ConstraintKind.TERMINAL_SOC})

    def test_violation_text(self):
        schedule, pv, load = make_schedule(p_in=(4500.0, 0, 0, 0))
        violation = validate_schedule(schedule, EssParams(), GridParams(), pv, load)[0]
        self.assertIn("power_bound at step 0", str(violation))


if __name__ == "__main__":
    unittest.main()
