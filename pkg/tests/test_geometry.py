import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cat_alert_sim.geometry import (
    LATERAL_MINIMUM,
    PRECAUTIONARY_VERTICAL_MINIMUM,
    SPEED_OF_LIGHT,
    VERTICAL_MINIMUM,
    check_separation,
    distance,
    in_region,
    propagation_delay,
    ray_intersects_region,
)
from cat_alert_sim.models import Aircraft, CatRegion, Position3, Velocity3

coords = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)
positions = st.builds(Position3, coords, coords, st.floats(min_value=0, max_value=2e4))


def test_distance_examples():
    origin = Position3(0, 0, 0)
    assert distance(origin, origin) == 0
    assert distance(Position3(3, 4, 0), origin) == 5
    assert distance(Position3(1e5, 1e5, 1e4), origin) == pytest.approx(1.417745e5, abs=1e-1)


@given(positions, positions, positions)
def test_distance_is_a_metric(a, b, c):
    assert distance(a, b) >= 0
    assert distance(a, b) == distance(b, a)
    assert distance(a, c) <= distance(a, b) + distance(b, c) + 1e-6


def test_propagation_delay_examples():
    origin = Position3(0, 0, 0)
    assert propagation_delay(origin, Position3(SPEED_OF_LIGHT, 0, 0)) == pytest.approx(1.0)
    assert propagation_delay(origin, origin) == 0
    assert propagation_delay(origin, Position3(1e5, 0, 0)) == pytest.approx(3.3356e-4, abs=1e-8)


@pytest.mark.parametrize("speed", [0.0, -1.0])
def test_propagation_delay_rejects_non_positive_speed(speed):
    with pytest.raises(ValueError):
        propagation_delay(Position3(0, 0, 0), Position3(1, 0, 0), speed)


@given(positions, positions, st.floats(min_value=1.0, max_value=1e9))
def test_propagation_delay_scales_linearly(a, b, speed):
    assert propagation_delay(a, b, 2 * speed) == pytest.approx(
        propagation_delay(a, b, speed) / 2, rel=1e-12, abs=1e-300
    )


def test_in_region_boundary_inclusive():
    r = CatRegion(center=Position3(0, 0, 10_000), radius=1000)
    assert in_region(Position3(0, 0, 10_000), r)
    assert in_region(Position3(1000, 0, 10_000), r)
    assert not in_region(Position3(1001, 0, 10_000), r)


@given(positions, st.floats(min_value=1, max_value=1e5), st.floats(min_value=0, max_value=1e5))
def test_in_region_monotone_in_radius(p, radius, extra):
    center = Position3(0, 0, 10_000)
    if in_region(p, CatRegion(center, radius)):
        assert in_region(p, CatRegion(center, radius + extra))


def test_ray_towards_region():
    region = CatRegion(center=Position3(50_000, 0, 10_000), radius=5_000)
    start = Position3(0, 0, 10_000)
    assert ray_intersects_region(start, Velocity3(250, 0, 0), region)
    assert not ray_intersects_region(start, Velocity3(-250, 0, 0), region)
    assert not ray_intersects_region(start, Velocity3(0, 250, 0), region)
    # immobile hors de la zone : jamais sur la trajectoire
    assert not ray_intersects_region(start, Velocity3(), region)
    assert ray_intersects_region(Position3(50_000, 0, 10_000), Velocity3(), region)


@pytest.mark.parametrize(
    "bad", [(math.nan, 0, 0), (0, math.inf, 0), (0, 0, -1)], ids=["nan", "inf", "underground"]
)
def test_position_rejects_invalid_coordinates(bad):
    with pytest.raises(ValueError):
        Position3(*bad)


@pytest.mark.parametrize("radius", [0, -5])
def test_region_rejects_non_positive_radius(radius):
    with pytest.raises(ValueError):
        CatRegion(center=Position3(0, 0, 0), radius=radius)


# ---------------------------------------------------------
# Separation minima
# ---------------------------------------------------------
def _ac(i, x, y, z, heading_deg=0.0, speed=250.0):
    h = math.radians(heading_deg)
    vel = Velocity3(speed * math.cos(h), speed * math.sin(h))
    return Aircraft(id=i, pos=Position3(x, y, z), vel=vel)


def test_vertical_gap_is_enough():
    assert check_separation([_ac(0, 0, 0, 10_000), _ac(1, 0, 0, 10_400)]) == []


def test_identical_positions_same_path_violate():
    violations = check_separation([_ac(0, 0, 0, 10_000), _ac(1, 0, 0, 10_000)])
    assert len(violations) == 1
    v = violations[0]
    assert (v.first, v.second) == (0, 1)
    assert v.vertical_gap == 0
    assert v.along_track_gap == 0


def test_lateral_gap_is_enough():
    fleet = [_ac(0, 0, 0, 10_000, heading_deg=0), _ac(1, 0, 100_000, 10_100, heading_deg=90)]
    assert check_separation(fleet) == []
    assert 100_000 > LATERAL_MINIMUM


def test_along_track_rule_only_for_shared_paths():
    # 10 min à 250 m/s = 150 km dans l'axe
    ahead = 160_000.0
    same_path = [_ac(0, 0, 0, 10_000, 0), _ac(1, ahead, 0, 10_000, 2)]
    assert check_separation(same_path) == []
    crossing = [_ac(0, 0, 0, 10_000, 0), _ac(1, 70_000, 0, 10_000, 90)]
    assert len(check_separation(crossing)) == 1


def test_precautionary_vertical_minimum():
    pair = [_ac(0, 0, 0, 10_000), _ac(1, 0, 0, 10_400)]
    assert VERTICAL_MINIMUM == pytest.approx(304.8)
    assert check_separation(pair, vertical_minimum=PRECAUTIONARY_VERTICAL_MINIMUM) != []


def test_separation_needs_a_fleet():
    with pytest.raises(ValueError):
        check_separation([])


@given(st.permutations(range(5)))
def test_separation_symmetric_under_reordering(order):
    fleet = [
        _ac(0, 0, 0, 10_000),
        _ac(1, 10_000, 0, 10_100, 45),
        _ac(2, 0, 5_000, 10_000, 180),
        _ac(3, 200_000, 0, 10_000),
        _ac(4, 0, 0, 11_000),
    ]
    reference = {(v.first, v.second) for v in check_separation(fleet)}
    shuffled = [fleet[i] for i in order]
    assert {(v.first, v.second) for v in check_separation(shuffled)} == reference
