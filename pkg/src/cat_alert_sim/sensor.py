"""Onboard CAT detection: sensor sampling, deviation test and running average."""

from __future__ import annotations

import logging
from collections.abc import Iterator, Sequence
from dataclasses import replace
from statistics import fmean

import numpy as np

from .geometry import in_region
from .models import Aircraft, Alert, CatRegion, SensorState
from .types import Meters, Seconds

logger = logging.getLogger(__name__)


def sample_sensor(ac: Aircraft, regions: Sequence[CatRegion]) -> float:
    """Turbulence index read at the aircraft position.

    Ambient baseline plus the intensity of every region containing the aircraft.
    """
    return ac.sensor.baseline + sum(r.intensity for r in regions if in_region(ac.pos, r))


def detect_cat(
    s: SensorState, ac: Aircraft, clock: Seconds, alert_ids: Iterator[int]
) -> Alert | None:
    """Deviation test of the detection algorithm.

    ``s.current`` must already hold this tick's sample. An alert is raised when
    ``|current - average| >= threshold``. The caller updates the average
    afterwards whatever the outcome; a miss sends nothing.

    Args:
        s: sensor state with the fresh sample.
        ac: the sampling aircraft, its position becomes the alert location.
        clock: simulation time of the sample.
        alert_ids: run-wide id source, consumed only on detection.

    Returns:
        Alert | None
    """
    delta = abs(s.current - s.average)
    if delta < s.threshold:
        return None
    alert = Alert(alert_id=next(alert_ids), origin=ac.id, location=ac.pos, detected_at=clock)
    logger.debug("AC%d detected CAT (delta=%.3f) -> alert %d", ac.id, delta, alert.alert_id)
    return alert


def update_average(s: SensorState) -> SensorState:
    """Fold the current sample into the running average (EMA, or windowed mean)."""
    if s.window is not None:
        history = (*s.history, s.current)[-s.window :]
        return replace(s, history=history, average=fmean(history))
    average = (1.0 - s.ema_alpha) * s.average + s.ema_alpha * s.current
    return replace(s, average=average)


def spawn_regions(
    rng: np.random.Generator,
    fleet: Sequence[Aircraft],
    rate: float,
    duration: Seconds,
    radius: Meters = 5000.0,
    intensity: float = 10.0,
    lifetime: Seconds | None = None,
) -> list[CatRegion]:
    """Poisson stream of CAT regions, each centered on a random aircraft.

    Inter-arrival times are exponential with mean ``1 / rate``; the aircraft is
    drawn uniformly and the region is placed where it will be at spawn time.
    """
    if rate <= 0:
        return []
    regions = []
    t = float(rng.exponential(1.0 / rate))
    while t <= duration:
        host = fleet[int(rng.integers(len(fleet)))]
        expires = None if lifetime is None else t + lifetime
        regions.append(
            CatRegion(
                center=host.position_at(t),
                radius=radius,
                intensity=intensity,
                appears_at=t,
                expires_at=expires,
            )
        )
        t += float(rng.exponential(1.0 / rate))
    logger.info("%d CAT regions spawned over %.0f s", len(regions), duration)
    return regions
