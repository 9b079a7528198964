import logging
import os
from pathlib import Path

from dotenv import load_dotenv
from rich import print
from rich.logging import RichHandler

from cat_alert_sim import STRATEGY_NAMES, config_from_dict, run_matrix
from cat_alert_sim.cli import comparison_table

load_dotenv()
logging.basicConfig(
    level=os.getenv("CATSIM_LOG_LEVEL") or "WARNING",
    format="%(message)s",
    handlers=[RichHandler()],
)
SEEDS = [0, 1, 2]
OUT = Path(os.getenv("CATSIM_DEMO_OUT") or "out/demo")


def run_all_strategies(seeds: list[int] = SEEDS) -> None:
    """Same world, same seeds, every strategy: print the ranking."""
    configs = [config_from_dict({"name": kind, "strategy": kind}) for kind in STRATEGY_NAMES]
    for cfg in configs:
        print(cfg.strategy)
    _, rows = run_matrix(configs, seeds, OUT, workers=int(os.getenv("CATSIM_WORKERS") or 1))
    print(comparison_table(rows))


def run_one(kind: str = "direct_on_demand", seed: int = 0) -> None:
    cfg = config_from_dict({"name": kind, "strategy": kind, "world": {"duration": 300}})
    _, rows = run_matrix([cfg], [seed], OUT / "single")
    print(comparison_table(rows))


if __name__ == "__main__":
    run_all_strategies()
    # run_one()
