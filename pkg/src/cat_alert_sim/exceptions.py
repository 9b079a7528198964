class CatSimError(Exception):
    """Base class for every error raised by the simulator."""


class ConfigError(CatSimError):
    """Raised when a scenario file cannot be parsed or validated."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.key = key
        self.line = line
        where = ""
        if key:
            where += f" [{key}]"
        if line is not None:
            where += f" (line {line})"
        super().__init__(f"{message}{where}")


class SchedulingError(CatSimError):
    """Raised when an event is scheduled before the current clock."""


class StrategyError(CatSimError):
    """Raised when a strategy cannot run against the configured world."""


class DuplicateDeliveryError(CatSimError):
    """Raised when the same (alert, target) pair is recorded twice."""


class ExportError(CatSimError):
    """Raised when result files cannot be written."""
