"""Exception types raised across the package."""


class PwcError(Exception):
    pass


class ConfigurationError(PwcError, ValueError):
    pass


class ShapeError(PwcError, ValueError):
    pass


class DomainError(PwcError):
    """State support reaches the grid boundary, or a particle left the grid."""


class NodeError(PwcError):
    """Ratio-type quantity evaluated where the density vanishes."""


class HorizonError(PwcError):
    """Requested time lies outside the recorded trajectory window."""


class TruncationError(PwcError):
    pass


class ConsistencyError(PwcError):
    pass


class EigenrelationError(PwcError):
    pass
