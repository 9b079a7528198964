import logging
from importlib.metadata import PackageNotFoundError, version

from .config import ScenarioConfig, config_from_dict, load_config
from .dissemination import DisseminationParams
from .engine import Simulation
from .exceptions import (
    CatSimError,
    ConfigError,
    DuplicateDeliveryError,
    ExportError,
    SchedulingError,
    StrategyError,
)
from .metrics import MetricsSink, export, summarize
from .models import Aircraft, Alert, AtcTower, CatRegion, Position3, Velocity3
from .runner import build_simulation, run_matrix, run_single
from .strategies import (
    STRATEGIES,
    DirectBroadcast,
    DirectOnDemand,
    DirectOpenConnections,
    IndirectAlwaysOpen,
    IndirectInterval,
    IndirectPriority,
    MultiAtcRelay,
)

try:
    __version__ = version("cat-alert-sim")
except PackageNotFoundError:  # source checkout
    __version__ = "0.0.0"

STRATEGY_NAMES = list(STRATEGIES)

__all__ = [
    "__version__",
    "Aircraft",
    "Alert",
    "AtcTower",
    "CatRegion",
    "Position3",
    "Velocity3",
    "Simulation",
    "DisseminationParams",
    "MetricsSink",
    "export",
    "summarize",
    "ScenarioConfig",
    "load_config",
    "config_from_dict",
    "STRATEGY_NAMES",
    "build_simulation",
    "run_single",
    "run_matrix",
    "IndirectAlwaysOpen",
    "IndirectInterval",
    "IndirectPriority",
    "DirectBroadcast",
    "DirectOpenConnections",
    "DirectOnDemand",
    "MultiAtcRelay",
    "CatSimError",
    "ConfigError",
    "SchedulingError",
    "StrategyError",
    "DuplicateDeliveryError",
    "ExportError",
]

# Pas de handler par défaut : la configuration des logs revient à l'application
logging.getLogger(__name__).addHandler(logging.NullHandler())
