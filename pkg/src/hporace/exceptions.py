"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: configuration problems exit 2,
objective/protocol problems exit 3, corrupt run logs exit 4.
"""


class HporaceError(Exception):
    """Base class for all package errors."""


class SpaceError(HporaceError):
    """Invalid parameter definition, config, or encoded vector."""


class GridSizeError(SpaceError):
    """Requested grid exceeds the configured size cap."""

    def __init__(self, count: int, cap: int):
        self.count = count
        self.cap = cap
        super().__init__(f"grid would enumerate {count} configs, exceeding the cap of {cap}")


class ConsistencyError(HporaceError):
    """Trial indices out of sequence or duplicated."""


class EmptyHistoryError(HporaceError):
    """Operation requires at least one successful trial."""


class InsufficientHistoryError(HporaceError):
    """Not enough successful trials to fit a model (caller should fall back)."""


class GpFitError(HporaceError):
    """Covariance stayed singular after maximum jitter escalation."""


class ProtocolError(HporaceError):
    """External objective worker violated the wire protocol."""


class RunError(HporaceError):
    """An optimization run ended without a usable result."""


class MetricError(HporaceError):
    """A report metric is undefined for the given inputs."""


class ConfigError(HporaceError):
    """Malformed run/race configuration."""


class LogParseError(HporaceError):
    """A persisted trial log could not be parsed."""

    def __init__(self, path: str, line_no: int, reason: str):
        self.path = path
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {reason}")
