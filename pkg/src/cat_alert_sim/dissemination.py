"""Event generators for the alert-dissemination algorithms.

Each ``handle_detection_*`` function looks at a read-only view of the world and
returns a :class:`Plan`: the events to schedule, the aircraft targeted and
whether the alert must stay buffered on the detecting aircraft. The engine
applies the plan; nothing here mutates the world.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from typing import Protocol

from .events import Event, EventKind
from .exceptions import StrategyError
from .geometry import SPEED_OF_LIGHT, distance, ray_intersects_region
from .models import (
    Aircraft,
    Alert,
    AtcTower,
    CatRegion,
    Closed,
    Establishing,
    Open,
)
from .strategies import (
    DirectBroadcast,
    DirectOnDemand,
    DirectOpenConnections,
    MultiAtcRelay,
    Strategy,
    is_direct,
    is_indirect,
)
from .types import AircraftId, Meters, MetersPerSecond, Seconds, TowerId

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class DisseminationParams:
    signal_speed: MetersPerSecond = SPEED_OF_LIGHT
    comm_range: Meters | None = None  # None = unlimited
    atc_channel_estd: Seconds = 0.05
    path_filter: bool = False
    hazard_radius: Meters = 20_000.0
    recheck_window: Seconds = 60.0

    def __post_init__(self) -> None:
        if not self.signal_speed > 0:
            raise ValueError(f"signal_speed must be > 0, got {self.signal_speed}")
        if self.comm_range is not None and self.comm_range <= 0:
            raise ValueError(f"comm_range must be > 0, got {self.comm_range}")
        if self.atc_channel_estd < 0 or self.recheck_window < 0:
            raise ValueError("durations must be >= 0")
        if self.hazard_radius <= 0:
            raise ValueError(f"hazard_radius must be > 0, got {self.hazard_radius}")


class World(Protocol):
    @property
    def clock(self) -> Seconds: ...

    @property
    def fleet(self) -> Mapping[AircraftId, Aircraft]: ...

    @property
    def towers(self) -> Mapping[TowerId, AtcTower]: ...

    @property
    def params(self) -> DisseminationParams: ...


@dataclass(slots=True)
class Plan:
    events: list[Event] = field(default_factory=list)
    targets: list[AircraftId] = field(default_factory=list)
    buffer: bool = False


def hazard_region(alert: Alert, params: DisseminationParams) -> CatRegion:
    """Sphere around the detection point used by the on-path filter."""
    return CatRegion(center=alert.location, radius=params.hazard_radius)


def on_path(ac: Aircraft, alert: Alert, params: DisseminationParams, t: Seconds) -> bool:
    return ray_intersects_region(ac.position_at(t), ac.vel, hazard_region(alert, params))


def tower_targets(
    world: World, tower: AtcTower, alert: Alert, path_filter: bool
) -> list[AircraftId]:
    """Aircraft connected to the tower, origin excluded.

    With ``path_filter`` only aircraft inside or heading into the hazard sphere
    around the detection point are kept.
    """
    now = world.clock
    targets = []
    for ac in world.fleet.values():
        if ac.id == alert.origin or ac.connected_tower != tower.id:
            continue
        if path_filter and not on_path(ac, alert, world.params, now):
            continue
        targets.append(ac.id)
    return sorted(targets)


def nearby_aircraft(
    world: World, origin: Aircraft, exclude: Iterable[AircraftId] = ()
) -> list[AircraftId]:
    """Every other aircraft within comm range."""
    now = world.clock
    skip = set(exclude)
    comm_range = world.params.comm_range
    here = origin.position_at(now)
    out = []
    for ac in world.fleet.values():
        if ac.id == origin.id or ac.id in skip:
            continue
        if comm_range is not None and distance(here, ac.position_at(now)) > comm_range:
            continue
        out.append(ac.id)
    return sorted(out)


def _uplink(alert: Alert, origin: Aircraft, world: World) -> list[Event]:
    """Uplink to the connected tower, establishing the channel if needed."""
    now = world.clock
    tower_id = origin.connected_tower
    assert tower_id is not None
    match origin.atc_channels.get(tower_id, Closed()):
        case Open():
            return [Event(now, EventKind.UPLINK, aircraft=origin.id, tower=tower_id, alert=alert)]
        case Establishing(completion_time=done):
            return [Event(done, EventKind.UPLINK, aircraft=origin.id, tower=tower_id, alert=alert)]
        case _:
            done = now + world.params.atc_channel_estd
            return [
                Event(done, EventKind.CHANNEL_ESTABLISHED, aircraft=origin.id, tower=tower_id),
                Event(done, EventKind.UPLINK, aircraft=origin.id, tower=tower_id, alert=alert),
            ]


def handle_detection_indirect(alert: Alert, world: World, strategy: Strategy) -> Plan:
    """Single-tower relay: uplink, tower overhead, downlink to the tower's list.

    Tower-side steps (interval wait, priority queue, list creation) are driven by
    the events the uplink triggers. An origin in a no-comm zone keeps the alert
    until it gets coverage again.

    Raises:
        StrategyError: non-indirect strategy, or no tower configured.
    """
    if not is_indirect(strategy):
        raise StrategyError(f"{strategy.kind} is not an indirect strategy")
    if not world.towers:
        raise StrategyError("Indirect strategies need at least one ATC tower")
    origin = world.fleet[alert.origin]
    if origin.connected_tower is None:
        logger.debug("AC%d in a no-comm zone, storing alert %d", origin.id, alert.alert_id)
        return Plan(buffer=True)
    return Plan(events=_uplink(alert, origin, world))


def handle_detection_multi_atc(alert: Alert, world: World, strategy: Strategy) -> Plan:
    """Multi-tower relay: uplink to the connected tower, which floods its links.

    Raises:
        StrategyError: strategy is not a relay, or no tower configured.
    """
    if not isinstance(strategy, MultiAtcRelay):
        raise StrategyError(f"{strategy.kind} is not the multi-ATC relay")
    if not world.towers:
        raise StrategyError("The multi-ATC relay needs at least one ATC tower")
    origin = world.fleet[alert.origin]
    if origin.connected_tower is None:
        return Plan(buffer=True)
    return Plan(events=_uplink(alert, origin, world))


def _direct_sends(
    alert: Alert, origin: Aircraft, targets: list[AircraftId], world: World, strategy: Strategy
) -> list[Event]:
    now = world.clock
    events = []
    for tid in targets:
        match strategy:
            case DirectBroadcast():
                depart = now
            case DirectOpenConnections(per_target_overhead=overhead):
                depart = now + overhead
            case DirectOnDemand(channel_estd_time=estd):
                match origin.channel(tid):
                    case Open():
                        depart = now
                    case Establishing(completion_time=done):
                        depart = done
                    case _:
                        depart = now + estd
                        events.append(
                            Event(
                                depart,
                                EventKind.CHANNEL_ESTABLISHED,
                                aircraft=origin.id,
                                target=tid,
                            )
                        )
            case _:
                raise StrategyError(f"{strategy.kind} is not a direct strategy")
        events.append(
            Event(depart, EventKind.DIRECT_SEND, aircraft=origin.id, target=tid, alert=alert)
        )
    return events


def handle_detection_direct(alert: Alert, world: World, strategy: Strategy) -> Plan:
    """Aircraft-to-aircraft delivery to every aircraft within comm range.

    Raises:
        StrategyError: strategy is not a direct variant.
    """
    if not is_direct(strategy):
        raise StrategyError(f"{strategy.kind} is not a direct strategy")
    origin = world.fleet[alert.origin]
    targets = nearby_aircraft(world, origin)
    if not targets:
        # gardé à bord jusqu'au prochain essai
        logger.debug("AC%d has nobody in range, storing alert %d", origin.id, alert.alert_id)
        return Plan(buffer=True)
    return Plan(events=_direct_sends(alert, origin, targets, world, strategy), targets=targets)


def check_new_aircraft(
    alert: Alert, world: World, strategy: Strategy, already: Iterable[AircraftId]
) -> Plan:
    """Send to aircraft that came into range since the last pass."""
    origin = world.fleet[alert.origin]
    newcomers = nearby_aircraft(world, origin, exclude=already)
    if not newcomers:
        return Plan()
    return Plan(events=_direct_sends(alert, origin, newcomers, world, strategy), targets=newcomers)


def handle_detection(alert: Alert, world: World, strategy: Strategy) -> Plan:
    if is_direct(strategy):
        return handle_detection_direct(alert, world, strategy)
    if isinstance(strategy, MultiAtcRelay):
        return handle_detection_multi_atc(alert, world, strategy)
    return handle_detection_indirect(alert, world, strategy)
