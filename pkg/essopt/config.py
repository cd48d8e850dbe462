"""
Run configuration for essopt.

A run is described by one JSON document with the sections horizon, ess,
grid, tariff, feed_in, carbon, weights, solver, flags and the optional
preset, profiles, fixture and sweep entries. Every value is validated
before any solve starts; errors name the dotted field.
"""

import json
import math
import os
from dataclasses import dataclass, field, fields, replace
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple

from .device import EssParams, GridParams, SitePreset, preset
from .errors import ConfigError
from .fixtures import DEFAULT_LOAD_KW
from .formulation import Instance, InstanceFlags, Weights
from .milp import SolverConfig
from .strategy import centered_windows, hourly_windows, scenario_weights
from .tariff import CarbonModel, FeedInPolicy, TariffBand, TouTariff, default_tariff
from .timeseries import Horizon, Profile

SECTIONS = ("preset", "horizon", "profiles", "fixture", "ess", "grid", "tariff", "feed_in",
            "carbon", "weights", "solver", "flags", "sweep")

NAMED_WINDOW_SETS = {"centered12": centered_windows, "hourly4": hourly_windows}


# ---------------- FIELD HELPERS ----------------
def _number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", path)
    if not math.isfinite(value):
        raise ConfigError(f"expected a finite number, got {value!r}", path)
    return float(value)


def _integer(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"expected an integer, got {value!r}", path)
    return value


def _boolean(value: Any, path: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"expected true or false, got {value!r}", path)
    return value


def _section(data: Mapping[str, Any], name: str, allowed: Sequence[str]) -> Dict[str, Any]:
    section = data.get(name, {})
    if section is None:
        return {}
    if not isinstance(section, dict):
        raise ConfigError(f"expected an object, got {type(section).__name__}", name)
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown field, expected one of {', '.join(allowed)}", f"{name}.{key}")
    return section


def _pair(value: Any, path: str) -> Tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"expected [start, end], got {value!r}", path)
    return _number(value[0], f"{path}[0]"), _number(value[1], f"{path}[1]")


# ---------------- SECTIONS ---------------------
def _site(data: Mapping[str, Any]) -> SitePreset:
    name = data.get("preset", "A")
    if not isinstance(name, str):
        raise ConfigError(f"expected \"A\" or \"B\", got {name!r}", "preset")
    site = preset(name)

    ess = _section(data, "ess", [f.name for f in fields(EssParams) if f.name != "constant_power_mode"])
    changes: Dict[str, Any] = {}
    for key, value in ess.items():
        path = f"ess.{key}"
        changes[key] = _integer(value, path) if key == "max_starts" else _number(value, path)
    grid = _section(data, "grid", ["transformer_rating"])
    fixture = _section(data, "fixture", ["pv_capacity", "load_kw"])
    return SitePreset(
        replace(site.ess, **changes),
        GridParams(_number(grid["transformer_rating"], "grid.transformer_rating"))
        if "transformer_rating" in grid else site.grid,
        _number(fixture["pv_capacity"], "fixture.pv_capacity") if "pv_capacity" in fixture else site.pv_capacity,
    )


def _tariff(data: Mapping[str, Any]) -> TouTariff:
    section = _section(data, "tariff", ["bands"])
    if "bands" not in section:
        return default_tariff()
    raw = section["bands"]
    if not isinstance(raw, list):
        raise ConfigError("expected a list of bands", "tariff.bands")
    bands = []
    for i, band in enumerate(raw):
        path = f"tariff.bands[{i}]"
        if isinstance(band, dict):
            values = [band.get(k) for k in ("start", "end", "price")]
        elif isinstance(band, (list, tuple)) and len(band) == 3:
            values = list(band)
        else:
            raise ConfigError("expected [start, end, price] or {start, end, price}", path)
        bands.append(TariffBand(*(_number(v, path) for v in values)))
    return TouTariff(tuple(bands))


def _feed_in(data: Mapping[str, Any]) -> FeedInPolicy:
    section = _section(data, "feed_in", ["normal_rate", "reop_rate", "reop_start", "reop_end", "reop_window"])
    values = {k: _number(v, f"feed_in.{k}") for k, v in section.items() if k != "reop_window"}
    if "reop_window" in section:
        values["reop_start"], values["reop_end"] = _pair(section["reop_window"], "feed_in.reop_window")
    return FeedInPolicy(**values)


def _carbon(data: Mapping[str, Any]) -> CarbonModel:
    section = _section(data, "carbon", ["city", "factor", "series", "sink_price"])
    sink = _number(section["sink_price"], "carbon.sink_price") if "sink_price" in section else None
    given = [k for k in ("city", "factor", "series") if k in section]
    if len(given) > 1:
        raise ConfigError(f"give only one of city, factor, series (got {', '.join(given)})", "carbon")
    if "series" in section:
        series = section["series"]
        if not isinstance(series, list):
            raise ConfigError("expected a list of numbers", "carbon.series")
        factor: Any = tuple(_number(v, f"carbon.series[{i}]") for i, v in enumerate(series))
    elif "factor" in section:
        factor = _number(section["factor"], "carbon.factor")
    else:
        factor = CarbonModel.for_city(str(section.get("city", "A"))).factor
    return CarbonModel(factor) if sink is None else CarbonModel(factor, sink)


def _weights(value: Any, path: str) -> Weights:
    if isinstance(value, dict):
        for key in value:
            if key not in ("alpha1", "alpha2", "alpha3"):
                raise ConfigError("unknown field, expected alpha1, alpha2, alpha3", f"{path}.{key}")
        return Weights(*(_number(value.get(f"alpha{i}", 0.0), f"{path}.alpha{i}") for i in (1, 2, 3)))
    if isinstance(value, (list, tuple)) and len(value) == 3:
        return Weights(*(_number(v, f"{path}[{i}]") for i, v in enumerate(value)))
    raise ConfigError(f"expected [alpha1, alpha2, alpha3], got {value!r}", path)


def _solver(data: Mapping[str, Any]) -> SolverConfig:
    allowed = [f.name for f in fields(SolverConfig)]
    section = _section(data, "solver", allowed)
    values: Dict[str, Any] = {}
    for key, value in section.items():
        path = f"solver.{key}"
        if key in ("branching_rule", "node_order"):
            if not isinstance(value, str):
                raise ConfigError(f"expected a string, got {value!r}", path)
            values[key] = value
        elif key in ("node_limit", "degenerate_threshold", "max_simplex_iterations", "refactor_interval"):
            values[key] = _integer(value, path)
        elif key == "time_limit_seconds" and value is None:
            values[key] = None
        else:
            values[key] = _number(value, path)
    try:
        return SolverConfig(**values)
    except ValueError as e:
        raise ConfigError(str(e)) from None


def _flags(data: Mapping[str, Any]) -> InstanceFlags:
    allowed = [f.name for f in fields(InstanceFlags)]
    section = _section(data, "flags", allowed)
    return InstanceFlags(**{k: _boolean(v, f"flags.{k}") for k, v in section.items()})


@dataclass(frozen=True)
class SweepConfig:
    weight_sets: Tuple[Weights, ...] = field(default_factory=lambda: tuple(scenario_weights()))
    reop_windows: Tuple[Tuple[float, float], ...] = field(default_factory=lambda: tuple(centered_windows()))


def _sweep(data: Mapping[str, Any]) -> SweepConfig:
    section = _section(data, "sweep", ["weight_sets", "reop_windows"])
    result = SweepConfig()
    if "weight_sets" in section:
        raw = section["weight_sets"]
        if not isinstance(raw, list) or not raw:
            raise ConfigError("expected a non-empty list", "sweep.weight_sets")
        result = replace(result, weight_sets=tuple(_weights(w, f"sweep.weight_sets[{i}]") for i, w in enumerate(raw)))
    if "reop_windows" in section:
        result = replace(result, reop_windows=parse_windows(section["reop_windows"]))
    return result


def parse_windows(value: Any) -> Tuple[Tuple[float, float], ...]:
    """A named window set ("centered12", "hourly4") or a list of [start, end] pairs."""
    if isinstance(value, str):
        if value not in NAMED_WINDOW_SETS:
            raise ConfigError(f"unknown window set {value!r}, expected one of {sorted(NAMED_WINDOW_SETS)}",
                              "sweep.reop_windows")
        return tuple(NAMED_WINDOW_SETS[value]())
    if not isinstance(value, list) or not value:
        raise ConfigError("expected a window set name or a non-empty list of [start, end]", "sweep.reop_windows")
    return tuple(_pair(w, f"sweep.reop_windows[{i}]") for i, w in enumerate(value))


# ---------------- RUN CONFIG -------------------
@dataclass(frozen=True)
class RunConfig:
    """A validated run description."""

    horizon: Horizon = field(default_factory=lambda: Horizon(1, 96))
    site: SitePreset = field(default_factory=lambda: preset("A"))
    tariff: TouTariff = field(default_factory=default_tariff)
    feed_in: FeedInPolicy = field(default_factory=FeedInPolicy)
    carbon: CarbonModel = field(default_factory=CarbonModel)
    weights: Weights = field(default_factory=Weights)
    flags: InstanceFlags = field(default_factory=InstanceFlags)
    solver: SolverConfig = field(default_factory=SolverConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    profiles: Optional[str] = None
    load_kw: float = DEFAULT_LOAD_KW

    @property
    def ess(self) -> EssParams:
        return self.site.ess

    @property
    def grid(self) -> GridParams:
        return self.site.grid

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], base_dir: Optional[str] = None) -> "RunConfig":
        """
        Build and validate a RunConfig from parsed JSON.

        Args:
            data: The configuration document
            base_dir: Directory that a relative profiles path is resolved against

        Raises:
            ConfigError: naming the offending field
        """
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        for key in data:
            if key not in SECTIONS:
                raise ConfigError(f"unknown section, expected one of {', '.join(SECTIONS)}", key)

        horizon_section = _section(data, "horizon", ["days", "steps_per_day"])
        horizon = Horizon(
            _integer(horizon_section.get("days", 1), "horizon.days"),
            _integer(horizon_section.get("steps_per_day", 96), "horizon.steps_per_day"),
        )

        profiles = data.get("profiles")
        if profiles is not None:
            if not isinstance(profiles, str):
                raise ConfigError(f"expected a file path, got {profiles!r}", "profiles")
            if base_dir and not os.path.isabs(profiles):
                profiles = os.path.join(base_dir, profiles)
            if not os.path.isfile(profiles):
                raise ConfigError(f"file not found: {profiles}", "profiles")

        carbon = _carbon(data)
        if carbon.is_series:
            carbon.series(horizon)

        fixture = _section(data, "fixture", ["pv_capacity", "load_kw"])
        load_kw = _number(fixture["load_kw"], "fixture.load_kw") if "load_kw" in fixture else DEFAULT_LOAD_KW
        if load_kw < 0:
            raise ConfigError("must be non-negative", "fixture.load_kw")

        return cls(
            horizon=horizon,
            site=_site(data),
            tariff=_tariff(data),
            feed_in=_feed_in(data),
            carbon=carbon,
            weights=_weights(data["weights"], "weights") if "weights" in data else Weights(),
            flags=_flags(data),
            solver=_solver(data),
            sweep=_sweep(data),
            profiles=profiles,
            load_kw=load_kw,
        )

    def with_overrides(self, time_limit: Optional[float] = None, horizon: Optional[Horizon] = None) -> "RunConfig":
        """Apply command-line overrides."""
        config = self
        if time_limit is not None:
            try:
                config = replace(config, solver=replace(config.solver, time_limit_seconds=float(time_limit)))
            except ValueError as e:
                raise ConfigError(str(e), "--time-limit") from None
        if horizon is not None:
            config = replace(config, horizon=horizon)
        return config

    def instance(self, pv: Profile, load: Profile) -> Instance:
        """The optimization instance of this run on the given profiles."""
        return Instance(self.horizon, pv, load, self.ess, self.grid, self.tariff, self.feed_in,
                        self.carbon, self.weights, self.flags)


def load_config(path: str) -> RunConfig:
    """
    Read and validate a JSON run configuration.

    Raises:
        ConfigError: if the file is missing, not JSON or invalid
    """
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"file not found: {path}", "--config") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}", "--config") from None
    return RunConfig.from_dict(data, os.path.dirname(os.path.abspath(path)))
