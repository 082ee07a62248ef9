"""Exception types shared across the package."""


class CapExceededError(ValueError):
    """An exact enumeration or dense simulation was requested above its size cap."""


class NotActiveError(ValueError):
    """A variable id was expected to be active but is not."""


class TruncationRefusedError(RuntimeError):
    """An exact-mode tensor split would require discarding non-negligible weight."""


class UnsupportedAngleError(ValueError):
    """A gate angle falls outside the supported synthesis branch."""


class InfeasibleTrajectoryError(RuntimeError):
    """Constrained freezing reached a state where no spin value keeps the
    remaining search space feasible."""


class ConfigError(ValueError):
    """An experiment configuration failed validation."""
