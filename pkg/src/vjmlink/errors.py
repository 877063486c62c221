"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class VJMError(Exception):
    """Base class for every error raised by vjmlink."""


class InvalidArgumentError(VJMError, ValueError):
    pass


class SingularOrientationError(VJMError):
    """Orientation too close to the phi_y = +-pi/2 representation singularity."""

    def __init__(self, message: str, angle: str = "phi_y"):
        super().__init__(message)
        self.angle = angle


class OutOfRangeError(VJMError):
    """Virtual-spring deflection outside the configured elastic range."""


class SingularConfigurationError(VJMError):
    """A block system (equilibrium or stiffness) is numerically singular."""

    def __init__(self, message: str, condition: float = float("inf")):
        super().__init__(message)
        self.condition = condition


class BucklingDetectedError(VJMError):
    """K_theta - H_theta_theta lost positive definiteness."""

    def __init__(self, message: str, eigenvalue: float):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class RankMismatchError(VJMError):
    def __init__(self, message: str, rank: int):
        super().__init__(message)
        self.rank = rank


class ConfigError(VJMError):
    """Malformed or invalid model configuration."""
