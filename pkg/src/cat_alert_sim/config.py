"""Scenario configuration: JSON files, defaults, validation and overrides."""

from __future__ import annotations

import copy
import json
import logging
import re
from collections.abc import Iterable
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

from .dissemination import DisseminationParams
from .exceptions import ConfigError
from .geometry import SPEED_OF_LIGHT, VERTICAL_MINIMUM
from .kinematics import WorldConfig
from .metrics import DEFAULT_BUCKET_WIDTH
from .models import AtcTower, CatRegion, Position3, SensorState
from .strategies import (
    STRATEGIES,
    MultiAtcRelay,
    Strategy,
    is_indirect,
    strategy_from_dict,
    strategy_to_dict,
)
from .types import JSONObject, Meters, PathType, Seconds

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class SensorConfig:
    baseline: float = 0.0
    threshold: float = 4.0
    ema_alpha: float = 0.125
    average: str = "ema"  # "ema" | "window"
    window: int = 8

    def __post_init__(self) -> None:
        if self.average not in ("ema", "window"):
            raise ValueError(f"average must be 'ema' or 'window', got {self.average!r}")

    def initial_state(self) -> SensorState:
        return SensorState(
            current=self.baseline,
            average=self.baseline,
            threshold=self.threshold,
            ema_alpha=self.ema_alpha,
            baseline=self.baseline,
            window=self.window if self.average == "window" else None,
        )


@dataclass(frozen=True, slots=True)
class RegionSpec:
    center: tuple[float, float, float]
    radius: Meters
    intensity: float = 10.0
    appears_at: Seconds = 0.0
    expires_at: Seconds | None = None

    def build(self) -> CatRegion:
        return CatRegion(
            center=Position3(*self.center),
            radius=self.radius,
            intensity=self.intensity,
            appears_at=self.appears_at,
            expires_at=self.expires_at,
        )


@dataclass(frozen=True, slots=True)
class RegionsConfig:
    static: tuple[RegionSpec, ...] = ()
    spawn_rate: float = 0.02  # regions per second
    spawn_radius: Meters = 5000.0
    spawn_intensity: float = 10.0
    lifetime: Seconds | None = 300.0

    def __post_init__(self) -> None:
        if self.spawn_rate < 0:
            raise ValueError(f"spawn_rate must be >= 0, got {self.spawn_rate}")
        if self.spawn_radius <= 0:
            raise ValueError(f"spawn_radius must be > 0, got {self.spawn_radius}")


@dataclass(frozen=True, slots=True)
class TowerSpec:
    pos: tuple[float, float, float]
    coverage_radius: Meters = 5e5
    list_creation_time: Seconds = 0.01
    links: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.list_creation_time < 0:
            raise ValueError(f"list_creation_time must be >= 0, got {self.list_creation_time}")

    def build(self, tower_id: int) -> AtcTower:
        return AtcTower(
            id=tower_id,
            pos=Position3(*self.pos),
            coverage_radius=self.coverage_radius,
            list_creation_time=self.list_creation_time,
            links=set(self.links),
        )


@dataclass(frozen=True, slots=True)
class DisseminationConfig:
    comm_range: Meters | None = None
    atc_channel_estd: Seconds = 0.05
    path_filter: bool = False
    hazard_radius: Meters = 20_000.0
    recheck_window: Seconds = 60.0
    background_rate: float = 0.0  # background messages per second and per tower

    def __post_init__(self) -> None:
        if self.background_rate < 0:
            raise ValueError(f"background_rate must be >= 0, got {self.background_rate}")

    def params(self, signal_speed: float) -> DisseminationParams:
        return DisseminationParams(
            signal_speed=signal_speed,
            comm_range=self.comm_range,
            atc_channel_estd=self.atc_channel_estd,
            path_filter=self.path_filter,
            hazard_radius=self.hazard_radius,
            recheck_window=self.recheck_window,
        )


@dataclass(frozen=True, slots=True)
class ScenarioConfig:
    strategy: Strategy
    name: str = ""
    world: WorldConfig = field(default_factory=WorldConfig)
    sensor: SensorConfig = field(default_factory=SensorConfig)
    regions: RegionsConfig = field(default_factory=RegionsConfig)
    towers: tuple[TowerSpec, ...] = ()
    dissemination: DisseminationConfig = field(default_factory=DisseminationConfig)
    signal_speed: float = SPEED_OF_LIGHT
    vertical_minimum: Meters = VERTICAL_MINIMUM
    bucket_width: Seconds = DEFAULT_BUCKET_WIDTH
    output: str = "out"

    @property
    def label(self) -> str:
        return self.name or self.strategy.kind


# ---------------------------------------------------------
# Parsing
# ---------------------------------------------------------
_SECTIONS: dict[str, type] = {
    "world": WorldConfig,
    "sensor": SensorConfig,
    "regions": RegionsConfig,
    "dissemination": DisseminationConfig,
}
_TOP_LEVEL = {f.name for f in fields(ScenarioConfig)}


class _Locator:
    """Find the line a key appears on, for error messages."""

    def __init__(self, text: str | None):
        self.text = text

    def line(self, key_path: str) -> int | None:
        if not self.text:
            return None
        leaf = key_path.split(".")[-1].split("[")[0]
        m = re.search(rf'"{re.escape(leaf)}"\s*:', self.text)
        if not m:
            return None
        return self.text.count("\n", 0, m.start()) + 1

    def error(self, message: str, key_path: str) -> ConfigError:
        return ConfigError(message, key=key_path, line=self.line(key_path))


def _check_keys(data: Any, allowed: Iterable[str], path: str, loc: _Locator) -> None:
    if not isinstance(data, dict):
        raise loc.error("Expected an object", path)
    allowed = set(allowed)
    for key in data:
        if key not in allowed:
            raise loc.error(f"Unknown key {key!r}", f"{path}.{key}" if path else key)


def _build(cls: type, data: dict[str, Any], path: str, loc: _Locator) -> Any:
    try:
        return cls(**data)
    except (TypeError, ValueError) as e:
        raise loc.error(str(e), path) from e


def _numbers(value: Any, cast: type, path: str, loc: _Locator) -> tuple[Any, ...]:
    if not isinstance(value, list | tuple):
        raise loc.error("Expected a list", path)
    try:
        return tuple(cast(v) for v in value)
    except (TypeError, ValueError) as e:
        raise loc.error(f"Expected a list of numbers: {e}", path) from e


def _triple(value: Any, path: str, loc: _Locator) -> tuple[float, float, float]:
    if not isinstance(value, list | tuple) or len(value) not in (2, 3):
        raise loc.error("Expected [x, y] or [x, y, z]", path)
    x, y, *rest = _numbers(value, float, path, loc)
    return (x, y, rest[0] if rest else 0.0)


def _section(name: str, data: dict[str, Any], loc: _Locator) -> Any:
    cls = _SECTIONS[name]
    raw = data.get(name, {})
    _check_keys(raw, (f.name for f in fields(cls)), name, loc)
    raw = dict(raw)
    if name == "world" and "altitude_band" in raw:
        raw["altitude_band"] = _numbers(raw["altitude_band"], float, "world.altitude_band", loc)
    if name == "regions":
        specs = []
        static = raw.get("static", [])
        if not isinstance(static, list):
            raise loc.error("Expected a list of regions", "regions.static")
        for i, region in enumerate(static):
            rpath = f"regions.static[{i}]"
            _check_keys(region, (f.name for f in fields(RegionSpec)), rpath, loc)
            region = dict(region)
            if "center" not in region:
                raise loc.error("Missing key 'center'", rpath)
            region["center"] = _triple(region["center"], f"{rpath}.center", loc)
            specs.append(_build(RegionSpec, region, rpath, loc))
            _build_region(specs[-1], rpath, loc)
        raw["static"] = tuple(specs)
    return _build(cls, raw, name, loc)


def _build_region(spec: RegionSpec, path: str, loc: _Locator) -> CatRegion:
    try:
        return spec.build()
    except ValueError as e:
        raise loc.error(str(e), path) from e


def _towers(data: dict[str, Any], world: WorldConfig, loc: _Locator) -> tuple[TowerSpec, ...]:
    raw = data.get("towers")
    if raw is None:
        # Par défaut : une tour au centre, qui couvre toute la zone
        centre = world.area_side / 2
        return (TowerSpec(pos=(centre, centre, 0.0)),)
    if not isinstance(raw, list):
        raise loc.error("Expected a list of towers", "towers")
    specs = []
    for i, tower in enumerate(raw):
        tpath = f"towers[{i}]"
        _check_keys(tower, (f.name for f in fields(TowerSpec)), tpath, loc)
        tower = dict(tower)
        if "pos" not in tower:
            raise loc.error("Missing key 'pos'", tpath)
        tower["pos"] = _triple(tower["pos"], f"{tpath}.pos", loc)
        tower["links"] = tuple(sorted(_numbers(tower.get("links", []), int, f"{tpath}.links", loc)))
        spec = _build(TowerSpec, tower, tpath, loc)
        try:
            spec.build(i)
        except ValueError as e:
            raise loc.error(str(e), tpath) from e
        for link in spec.links:
            if not 0 <= link < len(raw) or link == i:
                raise loc.error(f"Invalid tower link {link}", f"{tpath}.links")
        specs.append(spec)
    return tuple(specs)


def _strategy(data: dict[str, Any], loc: _Locator) -> Strategy:
    raw = data.get("strategy")
    if raw is None:
        raise loc.error("Missing key 'strategy'", "strategy")
    if isinstance(raw, str):
        raw = {"kind": raw}
    if not isinstance(raw, dict) or raw.get("kind") not in STRATEGIES:
        raise loc.error(f"Unknown strategy, expected one of {sorted(STRATEGIES)}", "strategy")
    try:
        return strategy_from_dict(raw)
    except (TypeError, ValueError) as e:
        raise loc.error(str(e), "strategy") from e


def config_from_dict(data: JSONObject, text: str | None = None) -> ScenarioConfig:
    """Validate a parsed scenario and fill every default.

    Args:
        data: decoded JSON object.
        text: original file content, only used to report line numbers.

    Raises:
        ConfigError: unknown key, missing strategy or constraint violation.
    """
    loc = _Locator(text)
    _check_keys(data, _TOP_LEVEL, "", loc)
    strategy = _strategy(data, loc)
    world = _section("world", data, loc)
    sections = {name: _section(name, data, loc) for name in ("sensor", "regions", "dissemination")}
    try:
        sections["sensor"].initial_state()
    except ValueError as e:
        raise loc.error(str(e), "sensor") from e
    try:
        sections["dissemination"].params(SPEED_OF_LIGHT)
    except ValueError as e:
        raise loc.error(str(e), "dissemination") from e

    scalars = {k: data[k] for k in ("name", "signal_speed", "vertical_minimum",
                                    "bucket_width", "output") if k in data}  # fmt: skip
    cfg = _build(
        ScenarioConfig,
        {
            "strategy": strategy,
            "world": world,
            "towers": _towers(data, world, loc),
            **sections,
            **scalars,
        },
        "",
        loc,
    )
    if (is_indirect(strategy) or isinstance(strategy, MultiAtcRelay)) and not cfg.towers:
        raise loc.error(f"{strategy.kind} needs at least one ATC tower", "towers")
    if cfg.signal_speed <= 0:
        raise loc.error("signal_speed must be > 0", "signal_speed")
    if cfg.bucket_width <= 0:
        raise loc.error("bucket_width must be > 0", "bucket_width")
    return cfg  # type: ignore[no-any-return]


def load_config(path: PathType, overrides: Iterable[str] = ()) -> ScenarioConfig:
    """Read a scenario file (or a ``run_meta.json`` echo) and resolve it.

    Args:
        path: JSON file.
        overrides: ``key.path=value`` strings applied before validation.

    Raises:
        ConfigError: unreadable file, malformed JSON or invalid content.
    """
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read {p}: {e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Invalid JSON in {p}: {e.msg}", line=e.lineno) from e

    if isinstance(data, dict) and "config" in data and "version" in data:
        logger.info("%s is a run_meta file, reloading its echoed config", p)
        data = data["config"]
        text = None
    data = apply_overrides(data, overrides)
    cfg = config_from_dict(data, text)
    logger.info("Scenario %r loaded from %s", cfg.label, p)
    return cfg


def apply_overrides(data: JSONObject, overrides: Iterable[str]) -> JSONObject:
    """Return a copy of ``data`` with ``key.path=value`` overrides applied.

    Values are decoded as JSON when possible, kept as strings otherwise.
    """
    data = copy.deepcopy(data)
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"Override must look like key.path=value, got {item!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node: Any = data
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError("Cannot override inside a non-object", key=key)
        node[parts[-1]] = value
    return data


def config_to_dict(cfg: ScenarioConfig) -> JSONObject:
    """Fully resolved, JSON-ready echo of a scenario (reloadable as is)."""
    out: dict[str, Any] = {
        "name": cfg.name,
        "strategy": strategy_to_dict(cfg.strategy),
        "world": asdict(cfg.world),
        "sensor": asdict(cfg.sensor),
        "regions": asdict(cfg.regions),
        "towers": [asdict(t) for t in cfg.towers],
        "dissemination": asdict(cfg.dissemination),
        "signal_speed": cfg.signal_speed,
        "vertical_minimum": cfg.vertical_minimum,
        "bucket_width": cfg.bucket_width,
        "output": cfg.output,
    }
    # tuples -> lists, so the echo is plain JSON
    return json.loads(json.dumps(out))  # type: ignore[no-any-return]
