class LPPError(Exception):
    """Base class for library errors."""


class ContractError(LPPError, ValueError):
    """A documented precondition was violated."""


class CapacityError(LPPError, MemoryError):
    """A request would exceed the configured memory or enumeration budget."""


class ConfigError(LPPError, ValueError):
    """Invalid experiment configuration."""


class DegenerateFitError(LPPError, ValueError):
    """Too few usable points to fit."""
