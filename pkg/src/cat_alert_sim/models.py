from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from rich.panel import Panel
from rich.text import Text

from .types import AircraftId, AlertId, Meters, Seconds, TowerId


@dataclass(frozen=True, slots=True)
class Position3:
    """Flat local-plane position: x east, y north, z altitude (meters)."""

    x: Meters
    y: Meters
    z: Meters = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise ValueError(f"Non-finite coordinates: {self}")
        if self.z < 0:
            raise ValueError(f"Altitude must be >= 0, got {self.z}")

    def offset(self, vel: Velocity3, dt: Seconds) -> Position3:
        return Position3(self.x + vel.x * dt, self.y + vel.y * dt, self.z + vel.z * dt)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)


@dataclass(frozen=True, slots=True)
class Velocity3:
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    @property
    def horizontal_speed(self) -> float:
        return math.hypot(self.x, self.y)

    @property
    def heading(self) -> float | None:
        """Heading in radians, counter-clockwise from east. None when hovering."""
        if self.x == 0.0 and self.y == 0.0:
            return None
        return math.atan2(self.y, self.x) % math.tau


@dataclass(frozen=True, slots=True)
class CatRegion:
    """Spherical turbulence region perturbing sensor readings."""

    center: Position3
    radius: Meters
    intensity: float = 10.0
    appears_at: Seconds = 0.0
    expires_at: Seconds | None = None

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ValueError(f"Region radius must be > 0, got {self.radius}")
        if self.intensity < 0:
            raise ValueError(f"Region intensity must be >= 0, got {self.intensity}")

    def active_at(self, t: Seconds) -> bool:
        if t < self.appears_at:
            return False
        return self.expires_at is None or t < self.expires_at


# Channel state: Closed | Establishing(completion_time) | Open
@dataclass(frozen=True, slots=True)
class Closed:
    pass


@dataclass(frozen=True, slots=True)
class Establishing:
    completion_time: Seconds


@dataclass(frozen=True, slots=True)
class Open:
    pass


type ChannelState = Closed | Establishing | Open

CLOSED = Closed()
OPEN = Open()


@dataclass(frozen=True, slots=True)
class Alert:
    """CAT detection alert message."""

    alert_id: AlertId
    origin: AircraftId
    location: Position3
    detected_at: Seconds

    def __post_init__(self) -> None:
        if self.detected_at < 0:
            raise ValueError(f"detected_at must be >= 0, got {self.detected_at}")

    def __rich__(self) -> Panel:
        loc = self.location
        text = Text(
            f"origin AC{self.origin} at ({loc.x:.0f}, {loc.y:.0f}, {loc.z:.0f}) "
            f"t={self.detected_at:.3f}s",
            style="cyan",
        )
        return Panel(text, title=f"⚠ CAT alert #{self.alert_id}", title_align="left")


@dataclass(frozen=True, slots=True)
class SensorState:
    """Sensor state: current reading, running average and threshold."""

    current: float = 0.0
    average: float = 0.0
    threshold: float = 4.0
    ema_alpha: float = 0.125
    baseline: float = 0.0
    window: int | None = None
    history: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.threshold <= 0:
            raise ValueError(f"threshold must be > 0, got {self.threshold}")
        if not 0 < self.ema_alpha <= 1:
            raise ValueError(f"ema_alpha must be in (0, 1], got {self.ema_alpha}")
        if self.window is not None and self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")


@dataclass
class Aircraft:
    id: AircraftId
    pos: Position3
    vel: Velocity3 = field(default_factory=Velocity3)
    sensor: SensorState = field(default_factory=SensorState)
    received: set[AlertId] = field(default_factory=set)
    channels: dict[AircraftId, ChannelState] = field(default_factory=dict)
    connected_tower: TowerId | None = None
    stored_alerts: list[Alert] = field(default_factory=list)
    atc_channels: dict[TowerId, ChannelState] = field(default_factory=dict)
    start: Position3 | None = None
    elapsed: Seconds = 0.0

    def __post_init__(self) -> None:
        if self.start is None:
            self.start = self.pos

    def position_at(self, t: Seconds) -> Position3:
        """Absolute straight-line position at simulation time t."""
        assert self.start is not None
        return self.start.offset(self.vel, t)

    def channel(self, peer: AircraftId) -> ChannelState:
        return self.channels.get(peer, CLOSED)

    def __rich__(self) -> Panel:
        p = self.pos
        lines = [
            f"pos = ({p.x:.0f}, {p.y:.0f}, {p.z:.0f})",
            f"speed = {self.vel.horizontal_speed:.1f} m/s",
            f"tower = {self.connected_tower}",
            f"alerts received = {len(self.received)}",
        ]
        text = Text("\n".join(lines), style="cyan")
        return Panel(text, title=f"AC{self.id}", title_align="left", border_style="blue")


class TowerMode(Enum):
    ALWAYS_OPEN = "always_open"
    INTERVAL = "interval"
    PRIORITY = "priority"


@dataclass
class AtcTower:
    id: TowerId
    pos: Position3
    coverage_radius: Meters
    mode: TowerMode = TowerMode.ALWAYS_OPEN
    # (priority, arrival sequence, alert or None for background traffic, arrival time, hops)
    queue: list[tuple[int, int, Alert | None, Seconds, int]] = field(default_factory=list)
    links: set[TowerId] = field(default_factory=set)
    list_creation_time: Seconds = 0.01
    service_time: Seconds = 1.0
    broadcast_period: Seconds = 50.0
    # runtime bookkeeping, owned by the engine
    arrivals: dict[AlertId, Seconds] = field(default_factory=dict)
    # (alert, hops, target list) built and held for the next broadcast tick
    pending: list[tuple[Alert, int, list[AircraftId]]] = field(default_factory=list)
    in_service: tuple[int, int, Alert | None, Seconds, int] | None = None
    seen: set[AlertId] = field(default_factory=set)
    waiting: list[tuple[Alert, int]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.coverage_radius <= 0:
            raise ValueError(f"coverage_radius must be > 0, got {self.coverage_radius}")
        if self.pos.z != 0:
            raise ValueError("Towers stand on the ground (z = 0)")

    def __rich__(self) -> Panel:
        lines = [
            f"mode = {self.mode.value}",
            f"coverage = {self.coverage_radius / 1000:.0f} km",
            f"links = {sorted(self.links)}",
            f"queued = {len(self.queue)}",
        ]
        text = Text("\n".join(lines), style="cyan")
        return Panel(text, title=f"ATC{self.id}", title_align="left", border_style="green")
