#!/usr/bin/env python3
"""
Unit tests for essopt report rendering.
"""

import sys
import os
import csv
import io
import json
import tempfile
import unittest

# Add the parent directory to the path so we can import the package
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from essopt.reports import CONTENT_TYPE_CSV, CONTENT_TYPE_JSON, Report, round_money


class TestReport(unittest.TestCase):
    """Tests for the Report class."""

    def test_round_money(self):
        self.assertEqual(round_money({"a": 1.234567, "b": [2.00004, -0.00001], "c": "x", "d": 3}),
                         {"a": 1.2346, "b": [2.0, 0.0], "c": "x", "d": 3})
        self.assertIsNone(round_money(float("inf")))

    def test_json_is_sorted(self):
        report = Report.json({"b": 1.0, "a": [1, 2]}, "out.json")
        self.assertEqual(report.content_type, CONTENT_TYPE_JSON)
        self.assertEqual(report.extension, "json")
        self.assertEqual(list(json.loads(report.body)), ["a", "b"])
        self.assertTrue(report.body.endswith("\n"))

    def test_json_without_rounding(self):
        report = Report.json({"x": 0.123456789}, money=False)
        self.assertEqual(json.loads(report.body)["x"], 0.123456789)

    def test_csv(self):
        report = Report.csv(("day", "cost", "note"), [(0, 1.5, None), (1, 0.1, "ok")])
        self.assertEqual(report.content_type, CONTENT_TYPE_CSV)
        self.assertEqual(report.body, "day,cost,note\n0,1.5,\n1,0.1,ok\n")

    def test_csv_quotes_commas(self):
        rows = [("0.2,0.7,0.1", 12.5, "peak, shoulder"), ('say "hi"', 1.0, None)]
        report = Report.csv(("weights", "cost", "note"), rows)
        self.assertIn('"0.2,0.7,0.1",12.5,"peak, shoulder"\n', report.body)
        read = list(csv.reader(io.StringIO(report.body)))
        self.assertEqual(read[0], ["weights", "cost", "note"])
        self.assertEqual(read[1], ["0.2,0.7,0.1", "12.5", "peak, shoulder"])
        self.assertEqual(read[2], ['say "hi"', "1.0", ""])

    def test_write_to_directory(self):
        with tempfile.TemporaryDirectory() as tmp:
            report = Report.text("a,b\n", "table.csv")
            path = report.write(tmp)
            self.assertEqual(path, os.path.join(tmp, "table.csv"))
            nested = report.write(os.path.join(tmp, "sub", "other.csv"))
            with open(nested, encoding="utf-8") as f:
                self.assertEqual(f.read(), "a,b\n")

    def test_deterministic(self):
        data = {"z": [1.0, 2.5], "y": {"q": 0.1}}
        self.assertEqual(Report.json(data).body, Report.json(dict(reversed(list(data.items())))).body)


if __name__ == "__main__":
    unittest.main()
