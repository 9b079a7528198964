from collections.abc import Callable, Sequence
from pathlib import Path

import pytest

from cat_alert_sim.dissemination import DisseminationParams
from cat_alert_sim.engine import Simulation
from cat_alert_sim.models import Aircraft, AtcTower, CatRegion, Position3, Velocity3
from cat_alert_sim.strategies import Strategy

ALTITUDE = 10_000.0
SCENARIOS = Path(__file__).parent.parent / "scenarios"


def aircraft(i: int, x: float, y: float, z: float = ALTITUDE, vx: float = 0.0) -> Aircraft:
    return Aircraft(id=i, pos=Position3(x, y, z), vel=Velocity3(vx, 0.0, 0.0))


def one_shot_region(ac: Aircraft, at: float = 0.0) -> CatRegion:
    """Region around ``ac`` active for a single tick, so exactly one alert fires."""
    return CatRegion(center=ac.pos, radius=1000.0, appears_at=at, expires_at=at + 0.5)


def make_sim(
    fleet: Sequence[Aircraft],
    strategy: Strategy,
    towers: Sequence[AtcTower] = (),
    regions: Sequence[CatRegion] = (),
    duration: float = 60.0,
    **params: object,
) -> Simulation:
    return Simulation(
        fleet=fleet,
        towers=towers,
        regions=regions,
        strategy=strategy,
        params=DisseminationParams(**params),  # type: ignore[arg-type]
        duration=duration,
    )


@pytest.fixture
def static_world() -> Callable[[], tuple[list[Aircraft], AtcTower, CatRegion]]:
    """1 tower + 3 motionless aircraft; AC0 detects at t=0, AC1 and AC2 stay clear.

    Both targets sit inside the default 20 km hazard sphere around AC0, so the
    relay path filter keeps them.
    """

    def build() -> tuple[list[Aircraft], AtcTower, CatRegion]:
        fleet = [
            aircraft(0, 10_000.0, 0.0),
            aircraft(1, 0.0, 10_000.0),
            aircraft(2, -5_000.0, 5_000.0, ALTITUDE + 1_000.0),
        ]
        tower = AtcTower(id=0, pos=Position3(0.0, 0.0, 0.0), coverage_radius=1e6)
        return fleet, tower, one_shot_region(fleet[0])

    return build
