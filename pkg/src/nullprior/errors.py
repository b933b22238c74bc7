"""Exception types shared across the package."""


class NullPriorError(ValueError):
    """Base class for all package errors."""


class DimensionMismatchError(NullPriorError):
    """Operand shape does not match the operator's declared dimensions."""


class SizeCapError(NullPriorError):
    """Problem size exceeds the dense-path cap (n <= 4096)."""


class InfeasibleDimensionError(NullPriorError):
    """Requested subspace dimension exceeds the null-space dimension."""


class RankDeficientError(NullPriorError):
    """Matrix does not have the full row rank the construction requires."""


class EmptyComplementError(NullPriorError):
    """Complement construction has no rows (mask or angle set is complete)."""


class TrainingDivergedError(NullPriorError):
    """Training loss became non-finite."""


class ConfigError(NullPriorError):
    """Experiment configuration failed validation."""
