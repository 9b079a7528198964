"""Fleet initialization, straight-line motion and tower association."""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from .geometry import distance
from .models import Aircraft, AtcTower, Closed, Position3, SensorState, Velocity3
from .types import AircraftId, Meters, MetersPerSecond, Seconds, TowerId

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class WorldConfig:
    area_side: Meters = 1e5  # 1e10 m² starting square
    fleet_size: int = 20
    aircraft_speed: MetersPerSecond = 250.0
    altitude_band: tuple[Meters, Meters] = (9000.0, 12000.0)
    tick: Seconds = 1.0
    seed: int = 0
    duration: Seconds = 1000.0

    def __post_init__(self) -> None:
        if self.area_side <= 0:
            raise ValueError(f"area_side must be > 0, got {self.area_side}")
        if self.fleet_size < 2:
            raise ValueError(f"fleet_size must be >= 2, got {self.fleet_size}")
        if self.tick <= 0:
            raise ValueError(f"tick must be > 0, got {self.tick}")
        if self.duration <= 0:
            raise ValueError(f"duration must be > 0, got {self.duration}")
        lo, hi = self.altitude_band
        if not 0 <= lo <= hi:
            raise ValueError(f"altitude_band must satisfy 0 <= min <= max, got {lo}, {hi}")
        if self.aircraft_speed < 0:
            raise ValueError(f"aircraft_speed must be >= 0, got {self.aircraft_speed}")


@dataclass(frozen=True, slots=True)
class Handoff:
    aircraft: AircraftId
    previous: TowerId | None
    current: TowerId | None


def initialize_fleet(
    cfg: WorldConfig,
    rng: np.random.Generator,
    sensor: SensorState | None = None,
) -> list[Aircraft]:
    """Draw the starting fleet.

    Draw order is fixed: all horizontal positions, then all altitudes, then all
    headings, each in aircraft-id order. Vertical speed is zero.

    Args:
        cfg: world parameters.
        rng: seeded numpy generator, consumed in the order above.
        sensor: initial sensor state shared by every aircraft.

    Returns:
        list[Aircraft]: ``cfg.fleet_size`` aircraft with ids ``0..n-1``.
    """
    n = cfg.fleet_size
    if n < 2:
        raise ValueError("A fleet needs at least two aircraft")
    xy = rng.uniform(0.0, cfg.area_side, size=(n, 2))
    lo, hi = cfg.altitude_band
    altitudes = rng.uniform(lo, hi, size=n)
    headings = rng.uniform(0.0, math.tau, size=n)

    sensor = sensor or SensorState()
    fleet = []
    for i in range(n):
        h = float(headings[i])
        vel = Velocity3(cfg.aircraft_speed * math.cos(h), cfg.aircraft_speed * math.sin(h), 0.0)
        pos = Position3(float(xy[i, 0]), float(xy[i, 1]), float(altitudes[i]))
        fleet.append(Aircraft(id=i, pos=pos, vel=vel, sensor=sensor))
    logger.info("Fleet of %d aircraft initialized", n)
    return fleet


def update_positions(fleet: Iterable[Aircraft], dt: Seconds) -> Iterable[Aircraft]:
    """Advance every aircraft by ``dt`` along its (fixed) velocity.

    Positions are recomputed from the starting point, so two half steps land
    exactly where one full step does.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    for ac in fleet:
        ac.elapsed += dt
        ac.pos = ac.position_at(ac.elapsed)
    return fleet


def move_fleet(fleet: Iterable[Aircraft], t: Seconds) -> None:
    """Place every aircraft at its absolute position for time ``t``."""
    for ac in fleet:
        ac.elapsed = t
        ac.pos = ac.position_at(t)


def nearest_tower(ac: Aircraft, towers: Sequence[AtcTower]) -> TowerId | None:
    """Closest tower covering the aircraft, lower id on ties; None in a no-comm zone."""
    best: tuple[float, TowerId] | None = None
    for tower in towers:
        d = distance(ac.pos, tower.pos)
        if d > tower.coverage_radius:
            continue
        if best is None or (d, tower.id) < best:
            best = (d, tower.id)
    return None if best is None else best[1]


def process_handoffs(fleet: Iterable[Aircraft], towers: Sequence[AtcTower]) -> list[Handoff]:
    """Reconnect every aircraft to its nearest covering tower.

    Returns one :class:`Handoff` per aircraft whose tower changed (possibly to
    ``None``). The channel to a newly joined tower starts Closed.
    """
    handoffs = []
    for ac in fleet:
        target = nearest_tower(ac, towers)
        if target == ac.connected_tower:
            continue
        handoffs.append(Handoff(ac.id, ac.connected_tower, target))
        logger.debug("Handoff AC%d: %s -> %s", ac.id, ac.connected_tower, target)
        ac.connected_tower = target
        if target is not None:
            ac.atc_channels.setdefault(target, Closed())
    return handoffs
