"""Geometry shared by every module: distances, signal delays, region tests and
airspace separation minima."""

from __future__ import annotations

import itertools
import math
from collections.abc import Sequence
from dataclasses import dataclass

from .models import Aircraft, CatRegion, Position3, Velocity3
from .types import AircraftId, Meters, MetersPerSecond, Seconds

SPEED_OF_LIGHT: MetersPerSecond = 2.99792458e8

FEET = 0.3048
MILE = 1609.344

VERTICAL_MINIMUM: Meters = 1000 * FEET  # 304.8 m
PRECAUTIONARY_VERTICAL_MINIMUM: Meters = 2000 * FEET  # 609.6 m
LATERAL_MINIMUM: Meters = 50 * MILE  # 80467.2 m
ALONG_TRACK_MINUTES = 10.0
SAME_PATH_TOLERANCE = math.radians(5.0)


def distance(a: Position3, b: Position3) -> Meters:
    """Euclidean distance between two positions."""
    return math.dist(a.as_tuple(), b.as_tuple())


def propagation_delay(
    a: Position3, b: Position3, signal_speed: MetersPerSecond = SPEED_OF_LIGHT
) -> Seconds:
    """Time for a signal travelling at ``signal_speed`` to cover ``a`` → ``b``.

    Raises:
        ValueError: If ``signal_speed`` is not strictly positive.
    """
    if not signal_speed > 0:
        raise ValueError(f"signal_speed must be > 0, got {signal_speed}")
    return distance(a, b) / signal_speed


def in_region(p: Position3, r: CatRegion) -> bool:
    """True when ``p`` lies inside the region sphere (boundary inclusive)."""
    return distance(p, r.center) <= r.radius


def ray_intersects_region(p: Position3, v: Velocity3, r: CatRegion) -> bool:
    """True when the forward ray ``p + s·v`` (s ≥ 0) meets the region sphere.

    An aircraft already inside the region always counts as on-path.
    """
    if in_region(p, r):
        return True
    dx, dy, dz = p.x - r.center.x, p.y - r.center.y, p.z - r.center.z
    a = v.x * v.x + v.y * v.y + v.z * v.z
    if a == 0.0:
        return False
    b = 2.0 * (dx * v.x + dy * v.y + dz * v.z)
    c = dx * dx + dy * dy + dz * dz - r.radius * r.radius
    disc = b * b - 4.0 * a * c
    if disc < 0:
        return False
    # c > 0 here (outside), so both roots share a sign: the ray hits iff b < 0
    return b < 0


@dataclass(frozen=True, slots=True)
class SeparationViolation:
    first: AircraftId
    second: AircraftId
    vertical_gap: Meters
    lateral_gap: Meters
    along_track_gap: Meters | None


def _same_path(va: Velocity3, vb: Velocity3) -> bool:
    ha, hb = va.heading, vb.heading
    if ha is None or hb is None:
        return False
    diff = abs(ha - hb) % math.tau
    return min(diff, math.tau - diff) < SAME_PATH_TOLERANCE


def _pair_violation(
    a: Aircraft, b: Aircraft, vertical_minimum: Meters
) -> SeparationViolation | None:
    first, second = (a, b) if a.id < b.id else (b, a)
    dz = abs(first.pos.z - second.pos.z)
    dx, dy = second.pos.x - first.pos.x, second.pos.y - first.pos.y
    along: Meters | None = None

    if _same_path(first.vel, second.vel):
        # decomposition le long de la route commune
        heading = first.vel.heading
        assert heading is not None
        ux, uy = math.cos(heading), math.sin(heading)
        along = abs(dx * ux + dy * uy)
        lateral = abs(-dx * uy + dy * ux)
        slower = min(first.vel.horizontal_speed, second.vel.horizontal_speed)
        along_ok = along >= ALONG_TRACK_MINUTES * 60.0 * slower
    else:
        lateral = math.hypot(dx, dy)
        along_ok = False

    if dz >= vertical_minimum or lateral >= LATERAL_MINIMUM or along_ok:
        return None
    return SeparationViolation(first.id, second.id, dz, lateral, along)


def check_separation(
    fleet: Sequence[Aircraft], vertical_minimum: Meters = VERTICAL_MINIMUM
) -> list[SeparationViolation]:
    """Report every aircraft pair that satisfies none of the separation minima.

    A pair is separated when its vertical gap reaches ``vertical_minimum``, its
    lateral gap reaches 50 mi, or (pairs sharing a path only) its along-track gap
    reaches ten minutes of travel at the slower speed. Violations are only
    reported, motion is never altered.
    """
    if not fleet:
        raise ValueError("check_separation needs a non-empty fleet")
    violations = [
        v
        for a, b in itertools.combinations(fleet, 2)
        if (v := _pair_violation(a, b, vertical_minimum)) is not None
    ]
    return sorted(violations, key=lambda v: (v.first, v.second))
