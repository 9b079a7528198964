from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .models import Alert
from .types import AircraftId, Seconds, TowerId


class EventKind(Enum):
    KINEMATICS_TICK = "kinematics_tick"
    SENSOR_SAMPLE = "sensor_sample"
    UPLINK = "uplink"
    TOWER_RECEIVE = "tower_receive"
    BROADCAST_TICK = "broadcast_tick"
    QUEUE_SERVICE = "queue_service"
    TOWER_FORWARD = "tower_forward"
    LIST_CREATED = "list_created"
    DOWNLINK = "downlink"
    DIRECT_SEND = "direct_send"
    CHANNEL_ESTABLISHED = "channel_established"
    DELIVERY = "delivery"
    HANDOFF = "handoff"
    STORE_RETRY = "store_retry"


@dataclass(frozen=True, slots=True)
class Event:
    """Timestamped simulation action.

    ``seq`` and ``cause`` are stamped by the engine when the event is scheduled:
    ``seq`` breaks time ties in scheduling order, ``cause`` is the ``seq`` of the
    event being dispatched at that moment (-1 for the initial schedule).
    """

    time: Seconds
    kind: EventKind
    aircraft: AircraftId | None = None
    target: AircraftId | None = None
    tower: TowerId | None = None
    peer_tower: TowerId | None = None
    alert: Alert | None = None
    hops: int = 0
    index: int = 0
    seq: int = -1
    cause: int = -1
