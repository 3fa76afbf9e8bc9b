"""Exception types raised by the simulator."""


class PDNRError(Exception):
    """Base class for all simulator errors."""


class InvalidDimensionError(PDNRError, ValueError):
    """Truncation dimension is too small or dimensions disagree."""


class InvalidArgumentError(PDNRError, ValueError):
    pass


class TruncationError(PDNRError):
    """Population reached the top of the truncated Fock space."""


class PositivityError(PDNRError):
    """Density matrix lost positivity beyond tolerance during integration."""


class NormCollapseError(PDNRError):
    """A stochastic step shrank the state norm below the abort threshold."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class DivergenceError(PDNRError):
    """Classical amplitude exceeded the divergence bound."""


class ConfigError(PDNRError, ValueError):
    """Invalid run configuration; ``key`` names the offending entry."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
