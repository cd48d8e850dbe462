#!/usr/bin/env python3
"""
Unit tests for the essopt LP text writer and reader.
"""

import sys
import os
import math
import unittest

import numpy as np

# Add the parent directory to the path so we can import the package
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from essopt.branch_and_bound import solve
from essopt.device import EssParams
from essopt.errors import LPParseError
from essopt.formulation import Instance, InstanceFlags, Weights, build_model
from essopt.lpformat import LINE_WIDTH, format_number, read_lp, write_lp
from essopt.milp import Model, Sense, VarKind
from essopt.timeseries import Horizon, Profile, ProfileKind

KNAPSACK_LP = """\\ Problem name: knapsack
Minimize
 obj: - 10 take_0 - 13 take_1 - 7 take_2 - 8 take_3
Subject To
 capacity: 5 take_0 + 7 take_1 + 3 take_2 + 4 take_3 <= 11
Bounds
 0 <= take_0 <= 1
 0 <= take_1 <= 1
 0 <= take_2 <= 1
 0 <= take_3 <= 1
Binaries
 take_0 take_1 take_2 take_3
End
"""


def knapsack():
    model = Model("knapsack")
    values, weights = [10, 13, 7, 8], [5, 7, 3, 4]
    ids = [model.add_variable(VarKind.BINARY, 0, 1, f"take_{i}") for i in range(4)]
    model.add_constraint(dict(zip(ids, weights)), "<=", 11, "capacity")
    model.set_objective({i: -v for i, v in zip(ids, values)})
    return model


def mixed_model():
    model = Model("mixed")
    x = model.add_variable(VarKind.CONTINUOUS, 0, 7.5, "x")
    y = model.add_variable(VarKind.CONTINUOUS, -2, 3, "y")
    z = model.add_variable(VarKind.CONTINUOUS, 1.25, 1.25, "z")
    u = model.add_variable(VarKind.BINARY, 0, 1, "u")
    model.add_constraint({x: 1, y: -1, z: 0.1}, ">=", -1.5, "lower")
    model.add_constraint({x: 1, u: -7.5}, "<=", 0, "gate")
    model.add_constraint({x: 1, y: 1}, "=", 4)
    model.set_objective({x: -1, y: 0.3333333333333333, u: 2})
    return model


def scheduling_models():
    """Battery scheduling models over a spread of horizons, weights and flags."""
    rng = np.random.default_rng(17)
    weights = [Weights(), Weights(0.7, 0.1, 0.2), Weights(0.1, 0.2, 0.7), Weights(0.2, 0.7, 0.1)]
    for k, steps in enumerate((4, 4, 12, 12, 12, 24, 24, 24, 4, 12, 24, 12)):
        h = Horizon(1, steps)
        pv = np.round(np.clip(rng.normal(1500, 1500, size=steps), 0, None), 1)
        load = np.round(rng.uniform(300, 2500, size=steps), 1)
        instance = Instance(
            h, Profile(ProfileKind.PV, pv, h), Profile(ProfileKind.LOAD, load, h),
            ess=EssParams(max_starts=k % 4),
            weights=weights[k % len(weights)],
            flags=InstanceFlags(constant_power_mode=k % 2 == 0, terminal_soc_equals_initial=k % 3 == 0),
        )
        yield build_model(instance)[0]


class TestWriter(unittest.TestCase):
    """Tests for write_lp."""

    def test_format_number(self):
        self.assertEqual(format_number(3.0), "3")
        self.assertEqual(format_number(-0.25), "-0.25")
        self.assertEqual(format_number(0.1 + 0.2), "0.30000000000000004")
        self.assertEqual(format_number(math.inf), "inf")
        self.assertEqual(format_number(-math.inf), "-inf")

    def test_knapsack_text(self):
        self.assertEqual(write_lp(knapsack()), KNAPSACK_LP)

    def test_bound_forms(self):
        text = write_lp(mixed_model())
        self.assertIn(" 0 <= x <= 7.5\n", text)
        self.assertIn(" -2 <= y <= 3\n", text)
        self.assertIn(" z = 1.25\n", text)
        self.assertIn(" c2: x + y = 4\n", text)

    def test_empty_objective(self):
        model = Model("empty")
        model.add_variable(VarKind.CONTINUOUS, 0, 1, "x")
        self.assertIn("Minimize\n obj: 0\n", write_lp(model))

    def test_long_rows_wrapped(self):
        model = Model("wide")
        ids = [model.add_variable(VarKind.CONTINUOUS, 0, 1, f"variable_{i}") for i in range(40)]
        model.add_constraint({i: 1.5 for i in ids}, "<=", 10, "wide_row")
        text = write_lp(model)
        self.assertTrue(all(len(line) <= LINE_WIDTH for line in text.splitlines()))
        self.assertEqual(len(read_lp(text).constraints[0].terms), 40)


class TestReader(unittest.TestCase):
    """Tests for read_lp."""

    def test_round_trip_is_canonical(self):
        for model in (knapsack(), mixed_model()):
            text = write_lp(model)
            self.assertEqual(write_lp(read_lp(text)), text)

    def test_round_trip_preserves_ids_and_optimum(self):
        model = mixed_model()
        parsed = read_lp(write_lp(model))
        self.assertEqual([v.name for v in parsed.variables], ["x", "y", "z", "u"])
        self.assertEqual(parsed.binary_ids, [3])
        self.assertEqual(parsed.name, "mixed")
        expected = solve(model).objective_value
        self.assertAlmostEqual(solve(parsed).objective_value, expected, delta=1e-9 * max(1.0, abs(expected)))

    def test_scheduling_models_round_trip(self):
        count = 0
        for model in scheduling_models():
            count += 1
            parsed = read_lp(write_lp(model))
            with self.subTest(model=count, variables=len(model.variables)):
                self.assertEqual([(v.name, v.kind, v.lb, v.ub) for v in parsed.variables],
                                 [(v.name, v.kind, v.lb, v.ub) for v in model.variables])
                self.assertEqual(parsed.objective, model.objective)
                self.assertEqual(len(parsed.constraints), len(model.constraints))
                for ours, theirs in zip(parsed.constraints, model.constraints):
                    self.assertEqual((ours.name, ours.sense, ours.rhs), (theirs.name, theirs.sense, theirs.rhs))
                    self.assertEqual(dict(ours.terms), dict(theirs.terms))
        self.assertGreaterEqual(count, 10)

    def test_keyword_names_on_wrapped_lines(self):
        model = Model("keywords")
        keywords = ["end", "bin", "min", "binaries", "subject", "bounds", "free", "st"]
        names = keywords + [f"{n}_{i}" for i, n in enumerate(keywords * 2)]
        ids = [model.add_variable(VarKind.BINARY, 0, 1, name) for name in names]
        model.add_constraint({i: 1 for i in ids}, "<=", 5, "pick")
        model.set_objective({i: -1 for i in ids})
        text = write_lp(model)
        continuation = [line for line in text.splitlines() if line.startswith("   ")]
        self.assertTrue(continuation)
        parsed = read_lp(text)
        self.assertEqual([v.name for v in parsed.variables], names)
        self.assertEqual(parsed.binary_ids, ids)
        self.assertEqual(dict(parsed.constraints[0].terms), dict(model.constraints[0].terms))

    def test_hand_written(self):
        text = """\\ a comment line
minimize
  3 a + b
subject to
  a + b >= 2    \\ trailing comment
  c1: a - 2.5e-1 b <= 1
bounds
  b <= 4
  a free
binary
  flag
end
"""
        model = read_lp(text)
        self.assertEqual([v.name for v in model.variables], ["b", "a", "flag"])
        b = model.variables[0]
        self.assertEqual((b.lb, b.ub), (0.0, 4.0))
        a = model.variables[1]
        self.assertEqual((a.lb, a.ub), (-math.inf, math.inf))
        flag = model.variables[2]
        self.assertEqual((flag.kind, flag.lb, flag.ub), (VarKind.BINARY, 0.0, 1.0))
        self.assertEqual(model.constraints[0].sense, Sense.GE)
        self.assertEqual(model.constraints[1].name, "c1")
        self.assertEqual(dict(model.constraints[1].terms), {1: 1.0, 0: -0.25})

    def test_constant_moves_to_rhs(self):
        model = read_lp("Minimize\n obj: x\nSubject To\n r: x + 2 <= 5\nEnd\n")
        self.assertEqual(model.constraints[0].rhs, 3.0)

    def assertParseError(self, text, line=None):
        with self.assertRaises(LPParseError) as ctx:
            read_lp(text)
        if line is not None:
            self.assertEqual(ctx.exception.line, line)
        return ctx.exception

    def test_malformed_number(self):
        error = self.assertParseError("Minimize\n obj: x\nSubject To\n r: 1.2.3 x <= 4\nEnd\n", line=4)
        self.assertEqual(error.column, 5)
        self.assertParseError("Minimize\n obj: 3x\nEnd\n", line=2)

    def test_missing_end(self):
        self.assertParseError("Minimize\n obj: x\nSubject To\n r: x <= 1\n")

    def test_unknown_sections(self):
        self.assertParseError("Maximize\n obj: x\nEnd\n", line=1)
        self.assertParseError("Minimize\n obj: x\nGenerals\n x\nEnd\n", line=3)

    def test_section_order(self):
        self.assertParseError("Minimize\n obj: x\nBounds\n x <= 1\nSubject To\n r: x <= 1\nEnd\n", line=5)
        self.assertParseError("Minimize\n obj: x\nBounds\nBounds\nEnd\n", line=4)
        self.assertParseError(" x + y\nMinimize\n obj: x\nEnd\n", line=1)
        self.assertParseError("Minimize\n obj: x\nEnd\n x\n", line=4)

    def test_duplicates(self):
        self.assertParseError("Minimize\n obj: x\nBounds\n x <= 1\n x >= 0\nEnd\n", line=5)
        self.assertParseError("Minimize\n obj: x\nBinaries\n x x\nEnd\n", line=4)

    def test_objective_constant_rejected(self):
        self.assertParseError("Minimize\n obj: x + 4\nEnd\n")

    def test_missing_sense(self):
        self.assertParseError("Minimize\n obj: x\nSubject To\n r: x 4\nEnd\n")


if __name__ == "__main__":
    unittest.main()
