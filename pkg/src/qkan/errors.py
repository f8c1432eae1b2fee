"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: ConfigError -> 2,
DataError -> 3, NumericalError -> 4.
"""


class QkanError(Exception):
    """Base class for all package errors."""


class ConfigError(QkanError):
    """Invalid configuration or CLI arguments."""


class DataError(QkanError):
    """Malformed input files (CSV, IDX, checkpoints)."""


class NumericalError(QkanError):
    """Numerical failure during computation (NaN loss, failed fits)."""


class DegenerateSpectrumError(NumericalError):
    """Frequency-basis fit is too ill-conditioned to trust."""


class FitError(NumericalError):
    """Least-squares spline fit failed (rank deficiency, bad design)."""
