"""Command-line front-end: ``cat-alert-sim run|matrix|validate|oracle``."""

from __future__ import annotations

import argparse
import glob
import logging
import os
import sys
from collections.abc import Sequence
from pathlib import Path

from dotenv import load_dotenv
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from .config import ScenarioConfig, load_config
from .exceptions import CatSimError
from .geometry import SPEED_OF_LIGHT
from .models import AtcTower, Position3
from .runner import ComparisonRow, run_matrix, run_single
from .strategies import LatencyBreakdown, direct_latency, indirect_latency

logger = logging.getLogger(__name__)
console = Console()


def _position(text: str) -> Position3:
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"bad coordinates {text!r}") from e
    if len(values) not in (2, 3):
        raise argparse.ArgumentTypeError(f"expected x,y[,z], got {text!r}")
    try:
        return Position3(*values)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def _seeds(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from e


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cat-alert-sim",
        description="Clear-air turbulence alert dissemination simulator",
    )
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING...")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--out", type=Path, default=None)
    run.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")

    matrix = sub.add_parser("matrix", help="run scenarios x seeds and rank strategies")
    matrix.add_argument("--configs", required=True, help="glob of scenario files")
    matrix.add_argument("--seeds", type=_seeds, default=[0])
    matrix.add_argument("--workers", type=int, default=None)
    matrix.add_argument("--out", type=Path, default=Path("out"))
    matrix.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE"
    )

    validate = sub.add_parser("validate", help="check a scenario file without running it")
    validate.add_argument("--config", required=True, type=Path)
    validate.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE"
    )

    oracle = sub.add_parser("oracle", help="closed-form latencies for a given geometry")
    oracle.add_argument("--org", required=True, type=_position)
    oracle.add_argument("--tar", required=True, type=_position)
    oracle.add_argument("--tower", type=_position, default=None)
    oracle.add_argument("--overhead", type=float, default=0.0)
    oracle.add_argument("--channel-estd", type=float, default=0.0)
    oracle.add_argument("--signal-speed", type=float, default=SPEED_OF_LIGHT)
    return parser


def setup_logging(level: str | None) -> None:
    load_dotenv()
    level = (level or os.getenv("CATSIM_LOG_LEVEL") or "INFO").upper()
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), rich_tracebacks=True)],
    )


def comparison_table(rows: Sequence[ComparisonRow]) -> Table:
    table = Table(title="Strategy comparison (max origin diff, s)")
    table.add_column("rank", justify="right")
    table.add_column("scenario")
    table.add_column("strategy")
    for column in ("runs", "alerts", "incomplete", "mean", "p95"):
        table.add_column(column, justify="right")
    for r in rows:
        table.add_row(
            str(r.rank),
            r.scenario,
            r.strategy,
            str(r.n_runs),
            str(r.n_alerts),
            str(r.n_incomplete),
            "-" if r.mean_max_origin_diff is None else f"{r.mean_max_origin_diff:.6g}",
            "-" if r.p95_max_origin_diff is None else f"{r.p95_max_origin_diff:.6g}",
        )
    return table


def oracle_table(rows: Sequence[tuple[str, LatencyBreakdown]]) -> Table:
    table = Table(title="Closed-form latencies (s)")
    table.add_column("path")
    for column in ("uplink", "overhead", "downlink", "channel", "direct", "total"):
        table.add_column(column, justify="right")
    for name, b in rows:
        table.add_row(
            name,
            *(
                f"{v:.9g}"
                for v in (b.uplink, b.overhead, b.downlink, b.channel_estd, b.direct, b.total)
            ),
        )
    return table


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, args.overrides)
    out = args.out if args.out is not None else Path(cfg.output)
    result = run_single(cfg, args.seed, out)
    diffs = result.summary.max_origin_diffs
    console.print(
        f"[bold]{result.scenario}[/] seed {result.seed}: "
        f"{len(result.summary.alerts)} alerts, {result.n_deliveries} deliveries"
    )
    if diffs:
        mean = sum(diffs) / len(diffs)
        console.print(f"max origin diff: mean {mean:.6g} s, worst {max(diffs):.6g} s")
    console.print(f"results written into {result.directory}")
    return 0


def _cmd_matrix(args: argparse.Namespace) -> int:
    paths = sorted(glob.glob(args.configs))
    if not paths:
        raise CatSimError(f"No scenario file matches {args.configs!r}")
    if not args.seeds:
        raise CatSimError("At least one seed is required")
    configs: list[ScenarioConfig] = [load_config(p, args.overrides) for p in paths]
    workers = args.workers or int(os.getenv("CATSIM_WORKERS") or 1)
    results, rows = run_matrix(configs, args.seeds, args.out, workers=workers)
    console.print(comparison_table(rows))
    console.print(f"comparison written into {args.out / 'comparison.csv'}")
    expected = len(configs) * len(args.seeds)
    return 0 if len(results) == expected else 1


def _cmd_validate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, args.overrides)
    console.print(f"[green]✔[/] {args.config}: {cfg.label!r} ({cfg.strategy.kind}) is valid")
    return 0


def _cmd_oracle(args: argparse.Namespace) -> int:
    rows = []
    if args.tower is not None:
        tower = AtcTower(id=0, pos=args.tower, coverage_radius=float("inf"))
        rows.append(
            (
                "indirect",
                indirect_latency(args.org, tower, args.tar, args.overhead, args.signal_speed),
            )
        )
    direct = direct_latency(args.org, args.tar, args.channel_estd, args.signal_speed)
    rows.append(("direct", direct))
    console.print(oracle_table(rows))
    return 0


COMMANDS = {
    "run": _cmd_run,
    "matrix": _cmd_matrix,
    "validate": _cmd_validate,
    "oracle": _cmd_oracle,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except CatSimError as e:
        logger.error("%s", e)
        console.print(f"[red]✖ {e}[/]")
        return 1
    except ValueError as e:
        console.print(f"[red]✖ {e}[/]")
        return 2


if __name__ == "__main__":
    sys.exit(main())
