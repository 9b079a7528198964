"""Build seeded simulations from a scenario, run them and compare strategies."""

from __future__ import annotations

import csv
import logging
from collections import defaultdict
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ScenarioConfig, config_to_dict
from .engine import Simulation
from .exceptions import CatSimError, ExportError
from .geometry import check_separation
from .kinematics import initialize_fleet
from .metrics import MetricsSink, RunSummary, export, summarize
from .sensor import spawn_regions
from .types import PathType, Seconds, TowerId

logger = logging.getLogger(__name__)

COMPARISON_COLUMNS = [
    "rank",
    "scenario",
    "strategy",
    "n_runs",
    "n_alerts",
    "n_incomplete",
    "mean_max_origin_diff",
    "p95_max_origin_diff",
]


@dataclass(frozen=True, slots=True)
class RunResult:
    scenario: str
    strategy: str
    seed: int
    summary: RunSummary
    n_deliveries: int
    separation_violations: int
    directory: Path | None = None


@dataclass(frozen=True, slots=True)
class ComparisonRow:
    rank: int
    scenario: str
    strategy: str
    n_runs: int
    n_alerts: int
    n_incomplete: int
    mean_max_origin_diff: Seconds | None
    p95_max_origin_diff: Seconds | None


def background_traffic(
    rng: np.random.Generator, towers: Sequence[TowerId], rate: float, duration: Seconds
) -> list[tuple[Seconds, TowerId]]:
    """Poisson stream of non-alert messages reaching each tower."""
    if rate <= 0:
        return []
    traffic = []
    for tower in towers:
        n = int(rng.poisson(rate * duration))
        traffic.extend((float(t), tower) for t in rng.uniform(0.0, duration, size=n))
    return sorted(traffic)


def build_simulation(cfg: ScenarioConfig, seed: int | None = None) -> tuple[Simulation, int]:
    """Draw the world for ``seed`` and wire a ready-to-run simulation.

    The seed feeds a numpy ``SeedSequence`` spawned into independent streams
    for the fleet, the CAT regions and the background traffic, so changing one
    concern never shifts the draws of another.

    Returns:
        tuple[Simulation, int]: the simulation and the number of aircraft pairs
        breaking separation minima at start.
    """
    seed = cfg.world.seed if seed is None else seed
    fleet_ss, regions_ss, background_ss = np.random.SeedSequence(seed).spawn(3)
    world = cfg.world

    fleet = initialize_fleet(
        world, np.random.default_rng(fleet_ss), sensor=cfg.sensor.initial_state()
    )
    violations = check_separation(fleet, cfg.vertical_minimum)
    if violations:
        logger.warning("%d aircraft pairs start below separation minima", len(violations))

    rc = cfg.regions
    regions = [spec.build() for spec in rc.static]
    regions += spawn_regions(
        np.random.default_rng(regions_ss),
        fleet,
        rc.spawn_rate,
        world.duration,
        radius=rc.spawn_radius,
        intensity=rc.spawn_intensity,
        lifetime=rc.lifetime,
    )

    towers = [spec.build(i) for i, spec in enumerate(cfg.towers)]
    background = background_traffic(
        np.random.default_rng(background_ss),
        [t.id for t in towers],
        cfg.dissemination.background_rate,
        world.duration,
    )
    sim = Simulation(
        fleet=fleet,
        towers=towers,
        regions=regions,
        strategy=cfg.strategy,
        params=cfg.dissemination.params(cfg.signal_speed),
        tick=world.tick,
        duration=world.duration,
        background=background,
        sink=MetricsSink(),
    )
    return sim, len(violations)


def run_single(
    cfg: ScenarioConfig, seed: int | None = None, out: PathType | None = None
) -> RunResult:
    """Run one scenario for one seed, exporting results when ``out`` is given."""
    from . import __version__

    seed = cfg.world.seed if seed is None else seed
    sim, violations = build_simulation(cfg, seed)
    with sim:
        sink = sim.run()
    summary = summarize(sink, cfg.bucket_width)

    directory = None
    if out is not None:
        directory = Path(out)
        meta = {
            "version": __version__,
            "seed": seed,
            "scenario": cfg.label,
            "strategy": cfg.strategy.kind,
            "config": config_to_dict(cfg),
            "n_alerts": len(sink.alerts),
            "n_deliveries": len(sink.deliveries),
            "suppressed_duplicates": sink.suppressed_duplicates,
            "handoffs": sink.handoffs,
            "initial_separation_violations": violations,
        }
        export(sink, directory, meta=meta, bucket_width=cfg.bucket_width)

    return RunResult(
        scenario=cfg.label,
        strategy=cfg.strategy.kind,
        seed=seed,
        summary=summary,
        n_deliveries=len(sink.deliveries),
        separation_violations=violations,
        directory=directory,
    )


def _matrix_job(cfg: ScenarioConfig, seed: int, out: Path) -> RunResult:
    return run_single(cfg, seed, out / cfg.label / f"seed-{seed}")


def run_matrix(
    configs: Sequence[ScenarioConfig],
    seeds: Sequence[int],
    out: PathType,
    workers: int = 1,
) -> tuple[list[RunResult], list[ComparisonRow]]:
    """Run every (scenario, seed) pair, in worker processes when ``workers > 1``.

    A failing run is logged and left out of the comparison; the others go on.

    Returns:
        tuple: results in (scenario, seed) order and the ranked comparison.
    """
    labels = [cfg.label for cfg in configs]
    if len(set(labels)) != len(labels):
        raise CatSimError(f"Scenario names must be unique in a matrix, got {labels}")
    out = Path(out)
    jobs = [(cfg, seed) for cfg in configs for seed in seeds]
    logger.info("Running %d jobs on %d worker(s)", len(jobs), workers)

    results: list[RunResult] = []
    failures = 0
    if workers <= 1:
        for cfg, seed in jobs:
            try:
                results.append(_matrix_job(cfg, seed, out))
            except CatSimError as e:
                failures += 1
                logger.error("%s seed %d failed: %s", cfg.label, seed, e)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [(cfg, seed, pool.submit(_matrix_job, cfg, seed, out)) for cfg, seed in jobs]
            for cfg, seed, future in futures:
                try:
                    results.append(future.result())
                except CatSimError as e:
                    failures += 1
                    logger.error("%s seed %d failed: %s", cfg.label, seed, e)
    if failures:
        logger.warning("%d of %d runs failed", failures, len(jobs))

    rows = compare(results)
    write_comparison(rows, out / "comparison.csv")
    return results, rows


def compare(results: Sequence[RunResult]) -> list[ComparisonRow]:
    """Pool ``max_origin_diff`` per scenario and rank by ascending mean.

    Scenarios without a single delivered alert rank last.
    """
    pooled: dict[tuple[str, str], list[float]] = defaultdict(list)
    runs: dict[tuple[str, str], int] = defaultdict(int)
    incomplete: dict[tuple[str, str], int] = defaultdict(int)
    for r in results:
        key = (r.scenario, r.strategy)
        runs[key] += 1
        pooled[key].extend(r.summary.max_origin_diffs)
        incomplete[key] += r.summary.n_incomplete

    stats = []
    for key in runs:
        values = np.asarray(pooled[key], dtype=float)
        if values.size:
            stats.append((key, values.size, float(values.mean()), float(np.percentile(values, 95))))
        else:
            stats.append((key, 0, None, None))
    stats.sort(key=lambda s: (s[2] is None, s[2] if s[2] is not None else 0.0, s[0]))
    return [
        ComparisonRow(rank, *key, runs[key], n, incomplete[key], mean, p95)
        for rank, (key, n, mean, p95) in enumerate(stats, start=1)
    ]


def write_comparison(rows: Sequence[ComparisonRow], path: PathType) -> Path:
    p = Path(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        with p.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(COMPARISON_COLUMNS)
            for r in rows:
                writer.writerow(
                    [
                        r.rank,
                        r.scenario,
                        r.strategy,
                        r.n_runs,
                        r.n_alerts,
                        r.n_incomplete,
                        "" if r.mean_max_origin_diff is None else f"{r.mean_max_origin_diff:#.15g}",
                        "" if r.p95_max_origin_diff is None else f"{r.p95_max_origin_diff:#.15g}",
                    ]
                )
    except OSError as e:
        raise ExportError(f"Cannot write {p}: {e}") from e
    return p
