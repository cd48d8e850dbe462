"""
Electricity, feed-in and carbon pricing for essopt.

All three are functions of the optimization step. Tariff bands are
half-open clock intervals [start, end); the REOP (renewable-energy
over-production) window of the feed-in policy is closed at both ends.
"""

import math
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple, Union

import numpy as np

from .errors import TariffError
from .timeseries import Horizon

# Clock comparisons are on multiples of the step length; this absorbs float noise
CLOCK_EPS = 1e-9

# ---------------- CARBON FACTORS ---------------
# Average grid emission factor per city code, kgCO2/kWh
CITY_CARBON_FACTORS: Dict[str, float] = {
    "A": 0.642, "B": 0.677, "C": 0.689, "D": 0.653, "E": 0.631, "F": 0.623,
    "G": 0.171, "H": 0.336, "J": 0.417, "K": 0.658, "L": 0.723, "M": 0.563,
    "N": 0.590,
}

DEFAULT_SINK_PRICE = 0.103  # $/kgCO2

PEAK_PRICE = 1.0276
FLAT_PRICE = 0.5976
VALLEY_PRICE = 0.2501

NORMAL_FEED_IN_RATE = 0.391
REOP_FEED_IN_RATE = -0.2703


@dataclass(frozen=True)
class TariffBand:
    """One clock interval [start_hour, end_hour) at a fixed price."""

    start_hour: float
    end_hour: float
    price: float

    def contains(self, hour: float) -> bool:
        return self.start_hour - CLOCK_EPS <= hour < self.end_hour - CLOCK_EPS


@dataclass(frozen=True)
class TouTariff:
    """Time-of-use tariff: bands that partition the day [0, 24)."""

    bands: Tuple[TariffBand, ...]

    def __post_init__(self):
        bands = tuple(sorted((b if isinstance(b, TariffBand) else TariffBand(*b) for b in self.bands),
                             key=lambda b: b.start_hour))
        object.__setattr__(self, "bands", bands)
        if not bands:
            raise TariffError("tariff needs at least one band", "tariff.bands")
        cursor = 0.0
        for band in bands:
            if not (math.isfinite(band.price) and band.price >= 0):
                raise TariffError(f"band price must be non-negative, got {band.price!r}", "tariff.bands")
            if band.end_hour <= band.start_hour:
                raise TariffError(f"empty band [{band.start_hour}, {band.end_hour})", "tariff.bands")
            if abs(band.start_hour - cursor) > CLOCK_EPS:
                kind = "gap" if band.start_hour > cursor else "overlap"
                raise TariffError(f"{kind} in tariff bands at hour {cursor}", "tariff.bands")
            cursor = band.end_hour
        if abs(cursor - 24.0) > CLOCK_EPS:
            raise TariffError(f"tariff bands end at hour {cursor}, not 24", "tariff.bands")

    def price_at_hour(self, hour: float) -> float:
        for band in self.bands:
            if band.contains(hour):
                return band.price
        # Unreachable for a valid partition
        raise TariffError(f"no tariff band contains hour {hour}")

    def scaled(self, k: float) -> "TouTariff":
        return TouTariff(tuple(TariffBand(b.start_hour, b.end_hour, b.price * k) for b in self.bands))

    @property
    def prices(self) -> Tuple[float, ...]:
        """Distinct band prices, ascending."""
        return tuple(sorted({b.price for b in self.bands}))


def default_tariff() -> TouTariff:
    """The three-level peak/flat/valley tariff used throughout the case studies."""
    return TouTariff((
        TariffBand(0.0, 8.0, VALLEY_PRICE),
        TariffBand(8.0, 11.0, PEAK_PRICE),
        TariffBand(11.0, 17.0, FLAT_PRICE),
        TariffBand(17.0, 22.0, PEAK_PRICE),
        TariffBand(22.0, 24.0, FLAT_PRICE),
    ))


def _check_step(horizon: Horizon, step: int) -> None:
    if not 0 <= step < horizon.total_steps:
        raise TariffError(f"step {step} out of range [0, {horizon.total_steps})")


def price_at(tariff: TouTariff, horizon: Horizon, step: int) -> float:
    """Energy price ($/kWh) of the band containing the step's start time."""
    _check_step(horizon, step)
    return tariff.price_at_hour(horizon.clock_hour(step))


def price_series(tariff: TouTariff, horizon: Horizon) -> np.ndarray:
    """price_at for every step of the horizon."""
    return np.array([price_at(tariff, horizon, t) for t in range(horizon.total_steps)])


# ---------------- FEED-IN ----------------------
@dataclass(frozen=True)
class FeedInPolicy:
    """
    Price applied to exported energy.

    Attributes:
        normal_rate: $/kWh outside the REOP window (positive = revenue)
        reop_rate: $/kWh inside the window (negative = penalty)
        reop_start: Window start t_R, hours
        reop_end: Window end t_S, hours
    """

    normal_rate: float = NORMAL_FEED_IN_RATE
    reop_rate: float = REOP_FEED_IN_RATE
    reop_start: float = 11.0
    reop_end: float = 15.0

    def __post_init__(self):
        for name in ("normal_rate", "reop_rate", "reop_start", "reop_end"):
            if not math.isfinite(getattr(self, name)):
                raise TariffError("must be finite", f"feed_in.{name}")
        if not 0.0 <= self.reop_start <= self.reop_end <= 24.0:
            raise TariffError(
                f"REOP window [{self.reop_start}, {self.reop_end}] must satisfy 0 <= t_R <= t_S <= 24",
                "feed_in.reop_window")

    def in_window(self, hour: float) -> bool:
        return self.reop_start - CLOCK_EPS <= hour <= self.reop_end + CLOCK_EPS

    def rate_at_hour(self, hour: float) -> float:
        return self.reop_rate if self.in_window(hour) else self.normal_rate

    def with_window(self, start: float, end: float) -> "FeedInPolicy":
        return FeedInPolicy(self.normal_rate, self.reop_rate, start, end)

    def scaled(self, k: float) -> "FeedInPolicy":
        return FeedInPolicy(self.normal_rate * k, self.reop_rate * k, self.reop_start, self.reop_end)


def feed_in_factor_at(policy: FeedInPolicy, horizon: Horizon, step: int) -> float:
    """Feed-in price ($/kWh) at the step's start time."""
    _check_step(horizon, step)
    return policy.rate_at_hour(horizon.clock_hour(step))


def feed_in_series(policy: FeedInPolicy, horizon: Horizon) -> np.ndarray:
    return np.array([feed_in_factor_at(policy, horizon, t) for t in range(horizon.total_steps)])


# ---------------- CARBON -----------------------
def carbon_factor(city_code: str) -> float:
    """
    Tabulated average grid emission factor for a city.

    Raises:
        TariffError: for an unknown city code
    """
    code = str(city_code).strip().upper()
    try:
        return CITY_CARBON_FACTORS[code]
    except KeyError:
        raise TariffError(f"unknown city code {city_code!r}", "carbon.city") from None


@dataclass(frozen=True)
class CarbonModel:
    """
    Emission factor (constant or one value per step) and carbon sink price.

    A per-step series is only meaningful on a horizon of the same length;
    Instance checks that.
    """

    factor: Union[float, Tuple[float, ...]] = CITY_CARBON_FACTORS["A"]
    sink_price: float = DEFAULT_SINK_PRICE

    def __post_init__(self):
        if isinstance(self.factor, (list, tuple, np.ndarray)):
            object.__setattr__(self, "factor", tuple(float(v) for v in self.factor))
            values: Sequence[float] = self.factor
        else:
            object.__setattr__(self, "factor", float(self.factor))
            values = (self.factor,)
        for v in values:
            if not (math.isfinite(v) and v >= 0):
                raise TariffError(f"emission factor must be non-negative, got {v!r}", "carbon.factor")
        if not (math.isfinite(self.sink_price) and self.sink_price >= 0):
            raise TariffError(f"sink price must be non-negative, got {self.sink_price!r}",
                              "carbon.sink_price")

    @classmethod
    def for_city(cls, city_code: str, sink_price: float = DEFAULT_SINK_PRICE) -> "CarbonModel":
        return cls(carbon_factor(city_code), sink_price)

    @property
    def is_series(self) -> bool:
        return isinstance(self.factor, tuple)

    def factor_at(self, step: int) -> float:
        if self.is_series:
            return self.factor[step]
        return self.factor

    def series(self, horizon: Horizon) -> np.ndarray:
        """Emission factor per step, kgCO2/kWh."""
        if self.is_series:
            if len(self.factor) != horizon.total_steps:
                raise TariffError(
                    f"carbon factor series has {len(self.factor)} values, horizon needs "
                    f"{horizon.total_steps}", "carbon.factor")
            return np.array(self.factor, dtype=float)
        return np.full(horizon.total_steps, self.factor)

    def scaled(self, k: float) -> "CarbonModel":
        """Same factors, sink price multiplied by k."""
        return CarbonModel(self.factor, self.sink_price * k)

    def slice_day(self, horizon: Horizon, day_index: int) -> "CarbonModel":
        if not self.is_series:
            return self
        n = horizon.steps_per_day
        return CarbonModel(self.factor[day_index * n:(day_index + 1) * n], self.sink_price)
