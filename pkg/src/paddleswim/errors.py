"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A configuration value violates a documented precondition."""


class NumericalError(RuntimeError):
    """A computation failed numerically (blow-up, singular system, ...)."""


class DegenerateDataError(ValueError):
    """Input data lacks the structure an estimator requires (rank, spread, ...)."""


class TubeViolationError(ValueError):
    """A requested evaluation point leaves the validity tube of a local model."""
