from os import PathLike
from typing import Any

type PathType = str | PathLike[str]
type JSONObject = dict[str, Any]

# Unités : mètres, secondes, mètres par seconde
type Meters = float
type Seconds = float
type MetersPerSecond = float
type AircraftId = int
type TowerId = int
type AlertId = int
