"""Alert-dissemination strategies and their closed-form latencies.

Indirect delivery (through a tower) costs ``uplink + overhead + downlink``,
the tower overhead being ``interval wait + priority wait + list creation``.
Direct delivery costs ``channel establishment + propagation``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Any

from .geometry import SPEED_OF_LIGHT, propagation_delay
from .models import AtcTower, Position3, TowerMode
from .types import MetersPerSecond, Seconds


def _check_non_negative(obj: object) -> None:
    for f in fields(obj):  # type: ignore[arg-type]
        value = getattr(obj, f.name)
        if value < 0:
            raise ValueError(f"{type(obj).__name__}.{f.name} must be >= 0, got {value}")


@dataclass(frozen=True, slots=True)
class IndirectAlwaysOpen:
    kind = "indirect_always_open"


@dataclass(frozen=True, slots=True)
class IndirectInterval:
    period: Seconds = 50.0
    kind = "indirect_interval"

    def __post_init__(self) -> None:
        _check_non_negative(self)
        if self.period == 0:
            raise ValueError("IndirectInterval.period must be > 0")


@dataclass(frozen=True, slots=True)
class IndirectPriority:
    service_time: Seconds = 1.0
    kind = "indirect_priority"

    def __post_init__(self) -> None:
        _check_non_negative(self)


@dataclass(frozen=True, slots=True)
class DirectBroadcast:
    kind = "direct_broadcast"


@dataclass(frozen=True, slots=True)
class DirectOpenConnections:
    per_target_overhead: Seconds = 0.002
    kind = "direct_open_connections"

    def __post_init__(self) -> None:
        _check_non_negative(self)


@dataclass(frozen=True, slots=True)
class DirectOnDemand:
    channel_estd_time: Seconds = 0.05
    kind = "direct_on_demand"

    def __post_init__(self) -> None:
        _check_non_negative(self)


@dataclass(frozen=True, slots=True)
class MultiAtcRelay:
    inter_tower_processing: Seconds = 0.01
    kind = "multi_atc_relay"

    def __post_init__(self) -> None:
        _check_non_negative(self)


type IndirectStrategy = IndirectAlwaysOpen | IndirectInterval | IndirectPriority
type DirectStrategy = DirectBroadcast | DirectOpenConnections | DirectOnDemand
type Strategy = IndirectStrategy | DirectStrategy | MultiAtcRelay

STRATEGIES: dict[str, type] = {
    cls.kind: cls
    for cls in (
        IndirectAlwaysOpen,
        IndirectInterval,
        IndirectPriority,
        DirectBroadcast,
        DirectOpenConnections,
        DirectOnDemand,
        MultiAtcRelay,
    )
}


def strategy_from_dict(data: dict[str, Any]) -> Strategy:
    """Build a strategy from ``{"kind": ..., <params>}``.

    Raises:
        KeyError: unknown kind.
        TypeError: unknown parameter for that kind.
    """
    params = dict(data)
    kind = params.pop("kind")
    cls = STRATEGIES[kind]
    return cls(**params)  # type: ignore[no-any-return]


def strategy_to_dict(strategy: Strategy) -> dict[str, Any]:
    return {"kind": strategy.kind, **asdict(strategy)}


def is_indirect(strategy: Strategy) -> bool:
    return isinstance(strategy, IndirectAlwaysOpen | IndirectInterval | IndirectPriority)


def is_direct(strategy: Strategy) -> bool:
    return isinstance(strategy, DirectBroadcast | DirectOpenConnections | DirectOnDemand)


def tower_mode_for(strategy: Strategy) -> TowerMode:
    match strategy:
        case IndirectInterval():
            return TowerMode.INTERVAL
        case IndirectPriority():
            return TowerMode.PRIORITY
        case _:
            return TowerMode.ALWAYS_OPEN


@dataclass(frozen=True, slots=True)
class LatencyBreakdown:
    uplink: Seconds = 0.0
    overhead: Seconds = 0.0
    downlink: Seconds = 0.0
    channel_estd: Seconds = 0.0
    direct: Seconds = 0.0
    total: Seconds = 0.0


def indirect_latency(
    org: Position3,
    tower: AtcTower,
    tar: Position3,
    overhead: Seconds,
    speed: MetersPerSecond = SPEED_OF_LIGHT,
) -> LatencyBreakdown:
    """Origin → tower → target latency with ``overhead`` spent at the tower."""
    if overhead < 0:
        raise ValueError(f"overhead must be >= 0, got {overhead}")
    uplink = propagation_delay(org, tower.pos, speed)
    downlink = propagation_delay(tower.pos, tar, speed)
    return LatencyBreakdown(
        uplink=uplink,
        overhead=overhead,
        downlink=downlink,
        total=uplink + overhead + downlink,
    )


def atc_overhead(interval_wait: Seconds, priority_wait: Seconds, list_time: Seconds) -> Seconds:
    """Total time an alert spends at a tower.

    A single tower mode leaves at most one of the two waits non-zero.
    """
    if min(interval_wait, priority_wait, list_time) < 0:
        raise ValueError("overhead components must be >= 0")
    return interval_wait + priority_wait + list_time


def interval_wait(arrival: Seconds, period: Seconds, cycle_origin: Seconds = 0.0) -> Seconds:
    """Wait until the next broadcast tick strictly after ``arrival``."""
    return period - ((arrival - cycle_origin) % period)


def direct_latency(
    org: Position3,
    tar: Position3,
    channel_estd: Seconds,
    speed: MetersPerSecond = SPEED_OF_LIGHT,
) -> LatencyBreakdown:
    """Aircraft-to-aircraft latency; ``channel_estd`` is 0 for plain broadcast."""
    if channel_estd < 0:
        raise ValueError(f"channel_estd must be >= 0, got {channel_estd}")
    direct = propagation_delay(org, tar, speed)
    return LatencyBreakdown(channel_estd=channel_estd, direct=direct, total=channel_estd + direct)
