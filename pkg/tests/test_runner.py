import csv
from collections import defaultdict

import numpy as np
import pytest
from scipy import stats

from cat_alert_sim.config import config_from_dict, load_config
from cat_alert_sim.events import EventKind
from cat_alert_sim.exceptions import CatSimError
from cat_alert_sim.geometry import distance, propagation_delay
from cat_alert_sim.metrics import AlertSummary, RunSummary
from cat_alert_sim.runner import (
    COMPARISON_COLUMNS,
    RunResult,
    background_traffic,
    build_simulation,
    compare,
    run_matrix,
    run_single,
)
from cat_alert_sim.strategies import STRATEGIES, DirectBroadcast, interval_wait

from .conftest import SCENARIOS


def _cfg(strategy, duration=200.0, spawn_rate=0.05, **extra):
    data = {
        "name": extra.pop("name", None) or (strategy if isinstance(strategy, str) else None),
        "strategy": strategy,
        "world": {"duration": duration, **extra.pop("world", {})},
        "regions": {"spawn_rate": spawn_rate},
        **extra,
    }
    if data["name"] is None:
        del data["name"]
    return config_from_dict(data)


def _files(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())}


# ---------------------------------------------------------
# Seeding
# ---------------------------------------------------------
def test_same_seed_same_bytes(tmp_path):
    cfg = _cfg("indirect_priority")
    run_single(cfg, 4, tmp_path / "a")
    run_single(cfg, 4, tmp_path / "b")
    assert _files(tmp_path / "a") == _files(tmp_path / "b")


def test_seed_changes_the_fleet():
    cfg = _cfg("direct_broadcast")
    a, _ = build_simulation(cfg, 0)
    b, _ = build_simulation(cfg, 1)
    assert [ac.pos for ac in a.fleet.values()] != [ac.pos for ac in b.fleet.values()]


def test_background_stream_does_not_shift_regions():
    quiet, _ = build_simulation(_cfg("indirect_priority"), 3)
    busy, _ = build_simulation(
        _cfg("indirect_priority", dissemination={"background_rate": 0.5}), 3
    )
    assert quiet.regions == busy.regions
    assert [ac.pos for ac in quiet.fleet.values()] == [ac.pos for ac in busy.fleet.values()]


def test_background_traffic():
    rng = np.random.default_rng(0)
    assert background_traffic(rng, [0, 1], 0.0, 100.0) == []
    traffic = background_traffic(rng, [0, 1], 0.5, 100.0)
    assert traffic == sorted(traffic)
    assert {tower for _, tower in traffic} <= {0, 1}
    assert all(0.0 <= t <= 100.0 for t, _ in traffic)


def test_run_meta_echo(tmp_path):
    cfg = _cfg("multi_atc_relay", towers=[{"pos": [50_000, 50_000]}])
    result = run_single(cfg, 2, tmp_path)
    assert result.directory == tmp_path
    assert load_config(tmp_path / "run_meta.json") == cfg


# ---------------------------------------------------------
# Matrix and ranking
# ---------------------------------------------------------
def _rows(path):
    with path.open(encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def test_matrix_single_job(tmp_path):
    results, rows = run_matrix([_cfg("direct_broadcast")], [0], tmp_path)
    assert len(results) == 1 and len(rows) == 1
    assert (tmp_path / "direct_broadcast" / "seed-0" / "deliveries.csv").exists()
    table = _rows(tmp_path / "comparison.csv")
    assert list(table[0]) == COMPARISON_COLUMNS
    assert table[0]["rank"] == "1"


def test_broadcast_ranks_first(tmp_path):
    configs = [_cfg(kind) for kind in STRATEGIES]
    results, rows = run_matrix(configs, [0, 1], tmp_path)
    assert len(results) == 14
    assert [r.rank for r in rows] == list(range(1, 8))
    assert rows[0].strategy == DirectBroadcast.kind
    assert all(r.n_runs == 2 for r in rows)

    # même monde, même alerte, même cible : jamais plus tôt qu'en diffusion directe
    def per_target(kind, seed):
        path = tmp_path / kind / f"seed-{seed}" / "deliveries.csv"
        return {(r["alert_id"], r["target"]): float(r["origin_diff"]) for r in _rows(path)}

    for seed in (0, 1):
        direct = per_target("direct_broadcast", seed)
        assert direct
        for kind in ("indirect_always_open", "indirect_interval", "indirect_priority"):
            for key, diff in per_target(kind, seed).items():
                assert diff >= direct[key]


def test_failed_run_is_left_out(tmp_path, caplog):
    good = _cfg("direct_broadcast")
    bad = _cfg("indirect_always_open")
    # un fichier à la place du dossier de sortie : l'export échoue
    (tmp_path / "indirect_always_open").mkdir()
    (tmp_path / "indirect_always_open" / "seed-0").write_text("taken")
    results, rows = run_matrix([good, bad], [0], tmp_path)
    assert [r.scenario for r in results] == ["direct_broadcast"]
    assert [r.scenario for r in rows] == ["direct_broadcast"]
    assert "1 of 2 runs failed" in caplog.text


def test_matrix_names_must_be_unique(tmp_path):
    cfg = _cfg("direct_broadcast")
    with pytest.raises(CatSimError):
        run_matrix([cfg, cfg], [0], tmp_path)


def test_parallel_matrix_matches_serial(tmp_path):
    configs = [_cfg("direct_broadcast", duration=50.0), _cfg("direct_on_demand", duration=50.0)]
    _, serial = run_matrix(configs, [0, 1], tmp_path / "serial")
    _, parallel = run_matrix(configs, [0, 1], tmp_path / "parallel", workers=2)
    assert serial == parallel


def test_compare_puts_empty_scenarios_last():
    def result(name, diffs):
        alerts = [AlertSummary(i, 0, 0.0, 1, 1, d, d, d) for i, d in enumerate(diffs)]
        return RunResult(name, "direct_broadcast", 0, RunSummary(alerts, []), len(diffs), 0)

    results = [result("slow", [2.0, 4.0]), result("none", []), result("fast", [1.0])]
    rows = compare(results)
    assert [r.scenario for r in rows] == ["fast", "slow", "none"]
    assert rows[1].mean_max_origin_diff == 3.0
    assert rows[2].mean_max_origin_diff is None and rows[2].n_alerts == 0
    assert all(r.n_incomplete == 0 for r in rows)


def test_compare_counts_incomplete_alerts():
    alerts = [
        AlertSummary(0, 0, 0.0, 2, 1, 1.0, 1.0, 1.0),
        AlertSummary(1, 0, 5.0, 3, 0, None, None, None),
    ]
    result = RunResult("held", "indirect_priority", 0, RunSummary(alerts, []), 1, 0)
    (row,) = compare([result, result])
    assert row.n_incomplete == 4
    assert row.n_alerts == 2


# ---------------------------------------------------------
# Strategy-level laws on full runs
# ---------------------------------------------------------
def test_interval_bound_and_phase_law():
    cfg = load_config(SCENARIOS / "indirect_interval.json")
    sim, _ = build_simulation(cfg)
    sink = sim.run()
    assert len(sink.alerts) >= 20

    period = cfg.strategy.period  # type: ignore[union-attr]
    records = {rec.alert_id: rec for rec in sink.tower_records}
    assert records
    for rec in records.values():
        assert rec.overhead == pytest.approx(interval_wait(rec.arrival, period), abs=1e-12)
        assert 0 < rec.overhead <= period

    (tower,) = sim.towers.values()
    for d in sink.deliveries:
        rec = records[d.alert_id]
        uplink = rec.arrival - d.detection_time
        target = sim.fleet[d.target].position_at(rec.released)
        downlink = propagation_delay(tower.pos, target)
        bound = period + uplink + downlink + tower.list_creation_time
        assert d.origin_diff <= bound + 1e-9


# ---------------------------------------------------------
# Invariants on seeded runs
# ---------------------------------------------------------
@pytest.mark.parametrize("kind", ["direct_broadcast", "indirect_always_open"])
def test_every_alert_reaches_every_other_aircraft_once(kind):
    cfg = _cfg(kind)
    sim, _ = build_simulation(cfg, 0)
    sink = sim.run()
    settled = [a for a in sink.alerts.values() if a.detected_at <= cfg.world.duration - 1.0]
    assert settled
    everyone = set(sim.fleet)
    for alert in settled:
        got = [d.target for d in sink.deliveries if d.alert_id == alert.alert_id]
        assert sorted(got) == sorted(everyone - {alert.origin})
        assert sink.targets[alert.alert_id] == everyone - {alert.origin}


@pytest.mark.parametrize(
    "kind", ["direct_broadcast", "direct_on_demand", "indirect_always_open", "indirect_priority"]
)
def test_no_delivery_beats_the_signal(kind):
    sim, _ = build_simulation(_cfg(kind), 0)
    sink = sim.run()
    speed = sim.params.signal_speed
    records = {rec.alert_id: rec for rec in sink.tower_records}
    assert sink.deliveries
    for d in sink.deliveries:
        alert = sink.alerts[d.alert_id]
        sent = records[d.alert_id].released if d.alert_id in records else d.detection_time
        target = sim.fleet[d.target].position_at(sent)
        assert d.origin_diff >= distance(alert.location, target) / speed - 1e-12


def test_each_hop_takes_at_least_its_propagation_delay():
    sim, _ = build_simulation(_cfg("indirect_always_open"), 0)
    sim.trace = []
    sink = sim.run()
    speed = sim.params.signal_speed
    (tower,) = sim.towers.values()
    records = {rec.alert_id: rec for rec in sink.tower_records}
    assert records and sink.deliveries

    for alert_id, rec in records.items():
        alert = sink.alerts[alert_id]
        uplink = distance(alert.location, tower.pos) / speed
        assert rec.arrival - alert.detected_at >= uplink - 1e-12
    for d in sink.deliveries:
        rec = records[d.alert_id]
        target = sim.fleet[d.target].position_at(rec.released)
        assert d.delivery_time - rec.released >= distance(tower.pos, target) / speed - 1e-12
        assert d.hops == 2

    times = {seq: t for t, seq, _, _ in sim.trace}
    kinds = {seq: kind for _, seq, kind, _ in sim.trace}
    for t, _, kind, cause in sim.trace:
        if kind in (EventKind.TOWER_RECEIVE, EventKind.DELIVERY):
            assert kinds[cause] in (EventKind.UPLINK, EventKind.DOWNLINK)
            assert t > times[cause]


def _slope(series):
    points = [(p.bucket_start, p.mean_max_origin_diff) for p in series]
    points = [(t, v) for t, v in points if v is not None]
    if len(points) < 2:
        return None
    t, v = np.asarray(points).T
    return float(np.polyfit(t, v, 1)[0])


@pytest.mark.slow
def test_broadcast_latency_grows_as_the_fleet_spreads():
    cfg = _cfg("direct_broadcast", duration=1000.0, spawn_rate=0.05)
    slopes = []
    pooled = defaultdict(list)
    for seed in range(30):
        result = run_single(cfg, seed)
        slope = _slope(result.summary.series)
        assert slope is not None
        slopes.append(slope)
        for p in result.summary.series:
            if p.mean_max_origin_diff is not None:
                pooled[p.bucket_start].append(p.mean_max_origin_diff)

    assert sum(s > 0 for s in slopes) >= 0.9 * len(slopes)
    t = sorted(pooled)
    mean = [float(np.mean(pooled[k])) for k in t]
    assert np.polyfit(t, mean, 1)[0] > 0


@pytest.mark.slow
def test_priority_latency_follows_alert_density():
    cfg = _cfg(
        {"kind": "indirect_priority", "service_time": 2.0},
        name="dense",
        duration=1000.0,
        spawn_rate=0.1,
        sensor={"ema_alpha": 1.0},
    )
    rhos = []
    for seed in range(30):
        series = run_single(cfg, seed).summary.series
        pairs = [
            (p.n_alerts, p.mean_max_origin_diff)
            for p in series
            if p.mean_max_origin_diff is not None
        ]
        counts, means = zip(*pairs, strict=True)
        rho = stats.spearmanr(counts, means).statistic
        if not np.isnan(rho):
            rhos.append(rho)
    assert len(rhos) >= 25
    assert np.mean(rhos) > 0.5
