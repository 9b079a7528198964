import itertools
import math

import numpy as np
import pytest

from cat_alert_sim.geometry import distance
from cat_alert_sim.kinematics import (
    WorldConfig,
    initialize_fleet,
    move_fleet,
    nearest_tower,
    process_handoffs,
    update_positions,
)
from cat_alert_sim.models import AtcTower, Closed, Position3

from .conftest import aircraft


def _tower(i, x, radius=50_000.0):
    return AtcTower(id=i, pos=Position3(x, 0.0, 0.0), coverage_radius=radius)


def test_same_seed_same_fleet():
    cfg = WorldConfig(fleet_size=10)
    a = initialize_fleet(cfg, np.random.default_rng(7))
    b = initialize_fleet(cfg, np.random.default_rng(7))
    assert [(ac.pos, ac.vel) for ac in a] == [(ac.pos, ac.vel) for ac in b]


def test_fleet_starts_in_the_area():
    cfg = WorldConfig(fleet_size=50, area_side=1e5)
    fleet = initialize_fleet(cfg, np.random.default_rng(1))
    assert [ac.id for ac in fleet] == list(range(50))
    lo, hi = cfg.altitude_band
    for ac in fleet:
        assert 0 <= ac.pos.x <= 1e5 and 0 <= ac.pos.y <= 1e5
        assert lo <= ac.pos.z <= hi
        assert ac.vel.z == 0
        assert ac.vel.horizontal_speed == pytest.approx(cfg.aircraft_speed)


def test_single_aircraft_rejected():
    with pytest.raises(ValueError, match="fleet_size"):
        WorldConfig(fleet_size=1)


def test_update_positions_linear_motion():
    ac = aircraft(0, 0.0, 0.0, vx=250.0)
    update_positions([ac], 4.0)
    assert ac.pos.x == 1000.0


def test_half_steps_match_full_step():
    a, b = aircraft(0, 12.5, 3.0, vx=237.3), aircraft(1, 12.5, 3.0, vx=237.3)
    update_positions([a], 0.5)
    update_positions([a], 0.5)
    update_positions([b], 1.0)
    assert a.pos == b.pos


def test_update_positions_rejects_non_positive_dt():
    with pytest.raises(ValueError):
        update_positions([aircraft(0, 0.0, 0.0)], 0.0)


def test_move_fleet_is_absolute():
    ac = aircraft(0, 100.0, 0.0, vx=-10.0)
    move_fleet([ac], 3.0)
    move_fleet([ac], 1.0)
    assert ac.pos.x == 90.0
    assert ac.elapsed == 1.0


def test_fleet_spreads_out_over_time():
    cfg = WorldConfig(fleet_size=10)
    means = np.zeros(3)
    for seed in range(100):
        fleet = initialize_fleet(cfg, np.random.default_rng(seed))
        for k, t in enumerate((0.0, 500.0, 1000.0)):
            move_fleet(fleet, t)
            pairs = itertools.combinations(fleet, 2)
            means[k] += np.mean([distance(a.pos, b.pos) for a, b in pairs])
    assert means[0] <= means[1] <= means[2]


def test_nearest_tower():
    towers = [_tower(0, 0.0), _tower(1, 80_000.0)]
    assert nearest_tower(aircraft(0, 10_000.0, 0.0, z=0.0), towers) == 0
    assert nearest_tower(aircraft(0, 70_000.0, 0.0, z=0.0), towers) == 1
    assert nearest_tower(aircraft(0, 500_000.0, 0.0), towers) is None


def test_nearest_tower_tie_goes_to_lower_id():
    towers = [_tower(7, 20_000.0), _tower(3, -20_000.0)]
    assert nearest_tower(aircraft(0, 0.0, 0.0, z=0.0), towers) == 3


def test_handoffs():
    towers = [_tower(0, 0.0), _tower(1, 100_000.0)]
    ac = aircraft(0, 10_000.0, 0.0, z=0.0)
    ac.connected_tower = 0
    assert process_handoffs([ac], towers) == []

    ac.pos = Position3(95_000.0, 0.0, 0.0)
    (h,) = process_handoffs([ac], towers)
    assert (h.previous, h.current) == (0, 1)
    assert ac.connected_tower == nearest_tower(ac, towers) == 1
    assert isinstance(ac.atc_channels[1], Closed)

    ac.pos = Position3(300_000.0, 0.0, 0.0)
    (h,) = process_handoffs([ac], towers)
    assert (h.previous, h.current) == (1, None)
    assert ac.connected_tower is None


def test_heading_uniformity_smoke():
    fleet = initialize_fleet(WorldConfig(fleet_size=200), np.random.default_rng(3))
    headings = [ac.vel.heading for ac in fleet]
    assert all(h is not None and 0 <= h < math.tau for h in headings)
