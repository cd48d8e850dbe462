#!/usr/bin/env python3
"""
Unit tests for essopt tariffs, feed-in policies and carbon models.
"""

import sys
import os
import unittest

import numpy as np

# Add the parent directory to the path so we can import the package
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from essopt.errors import TariffError
from essopt.tariff import (
    FLAT_PRICE, PEAK_PRICE, VALLEY_PRICE, CarbonModel, FeedInPolicy, TariffBand, TouTariff,
    carbon_factor, default_tariff, feed_in_factor_at, feed_in_series, price_at, price_series
)
from essopt.timeseries import Horizon


class TestTouTariff(unittest.TestCase):
    """Tests for the time-of-use tariff."""

    def test_default_bands(self):
        h = Horizon(1, 96)
        tariff = default_tariff()
        self.assertEqual(price_at(tariff, h, 0), VALLEY_PRICE)
        self.assertEqual(price_at(tariff, h, 31), VALLEY_PRICE)   # 07:45
        self.assertEqual(price_at(tariff, h, 32), PEAK_PRICE)     # 08:00
        self.assertEqual(price_at(tariff, h, 44), FLAT_PRICE)     # 11:00
        self.assertEqual(price_at(tariff, h, 68), PEAK_PRICE)     # 17:00
        self.assertEqual(price_at(tariff, h, 87), PEAK_PRICE)     # 21:45
        self.assertEqual(price_at(tariff, h, 88), FLAT_PRICE)     # 22:00

    def test_series_repeats_daily(self):
        h = Horizon(2, 24)
        prices = price_series(default_tariff(), h)
        np.testing.assert_array_equal(prices[:24], prices[24:])
        self.assertEqual(default_tariff().prices, (VALLEY_PRICE, FLAT_PRICE, PEAK_PRICE))

    def test_step_out_of_range(self):
        with self.assertRaises(TariffError):
            price_at(default_tariff(), Horizon(1, 24), 24)

    def test_gap_and_overlap_rejected(self):
        with self.assertRaises(TariffError):
            TouTariff((TariffBand(0, 10, 1.0), TariffBand(11, 24, 1.0)))
        with self.assertRaises(TariffError):
            TouTariff((TariffBand(0, 12, 1.0), TariffBand(11, 24, 1.0)))
        with self.assertRaises(TariffError):
            TouTariff((TariffBand(0, 12, 1.0),))
        with self.assertRaises(TariffError):
            TouTariff((TariffBand(0, 24, -1.0),))

    def test_bands_sorted(self):
        tariff = TouTariff(((12, 24, 2.0), (0, 12, 1.0)))
        self.assertEqual(tariff.price_at_hour(3), 1.0)
        self.assertEqual(tariff.price_at_hour(12), 2.0)

    def test_scaled(self):
        self.assertAlmostEqual(default_tariff().scaled(2).price_at_hour(9), 2 * PEAK_PRICE)


class TestFeedIn(unittest.TestCase):
    """Tests for the feed-in policy."""

    def test_window_is_closed(self):
        h = Horizon(1, 96)
        policy = FeedInPolicy()
        self.assertEqual(feed_in_factor_at(policy, h, 43), 0.391)     # 10:45
        self.assertEqual(feed_in_factor_at(policy, h, 44), -0.2703)   # 11:00
        self.assertEqual(feed_in_factor_at(policy, h, 60), -0.2703)   # 15:00
        self.assertEqual(feed_in_factor_at(policy, h, 61), 0.391)     # 15:15

    def test_series_counts(self):
        series = feed_in_series(FeedInPolicy(), Horizon(1, 96))
        self.assertEqual(int(np.sum(series < 0)), 17)

    def test_bad_window(self):
        with self.assertRaises(TariffError) as ctx:
            FeedInPolicy(reop_start=15, reop_end=11)
        self.assertEqual(ctx.exception.field, "feed_in.reop_window")
        with self.assertRaises(TariffError):
            FeedInPolicy(reop_start=-1, reop_end=11)

    def test_with_window(self):
        policy = FeedInPolicy().with_window(12.75, 13.25)
        self.assertTrue(policy.in_window(13.0))
        self.assertFalse(policy.in_window(12.5))


class TestCarbon(unittest.TestCase):
    """Tests for the carbon model."""

    def test_city_table(self):
        self.assertEqual(carbon_factor("A"), 0.642)
        self.assertEqual(carbon_factor("g"), 0.171)
        with self.assertRaises(TariffError):
            carbon_factor("Z")

    def test_constant_and_series(self):
        h = Horizon(1, 4)
        np.testing.assert_array_equal(CarbonModel.for_city("B").series(h), [0.677] * 4)
        model = CarbonModel((0.1, 0.2, 0.3, 0.4))
        self.assertTrue(model.is_series)
        self.assertEqual(model.factor_at(2), 0.3)
        with self.assertRaises(TariffError):
            model.series(Horizon(1, 12))

    def test_slice_day(self):
        model = CarbonModel(tuple(range(8)))
        self.assertEqual(model.slice_day(Horizon(2, 4), 1).factor, (4.0, 5.0, 6.0, 7.0))

    def test_negative_rejected(self):
        with self.assertRaises(TariffError):
            CarbonModel(-0.1)
        with self.assertRaises(TariffError):
            CarbonModel(0.5, -1.0)


if __name__ == "__main__":
    unittest.main()
