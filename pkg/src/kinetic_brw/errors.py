"""Exception types shared across the package."""


class KineticBrwError(Exception):
    """Base class for package errors."""


class ConfigError(KineticBrwError):
    """Invalid run configuration (bad schema, unknown keys, bad values)."""


class AnalysisError(KineticBrwError):
    """A computation could not produce a valid result."""


class BracketingError(AnalysisError):
    """Root finding failed to bracket a sign change."""


class BudgetError(AnalysisError):
    """A particle or sample budget was exhausted where truncation would bias results."""
