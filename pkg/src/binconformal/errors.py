"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration problems exit 2, data
problems exit 3, numerical failures exit 4.
"""


class BinConformalError(Exception):
    """Base class for errors raised by this package."""


class ConfigurationError(BinConformalError):
    """Invalid parameters or option combinations."""


class DataError(BinConformalError):
    """Input data that cannot support the requested computation."""


class NumericalError(BinConformalError):
    """Numerical failure such as non-convergence or a singular design."""
