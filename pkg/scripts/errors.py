"""
Exception hierarchy shared by every reserving module.

Each family carries the process exit code the CLI maps it to:
  - UsageError     → 1  (bad arguments, out-of-range parameters)
  - DataError      → 2  (input triangle or derived data fails validation)
  - NumericalError → 3  (singular systems, non-convergence, degenerate variance)
"""


class ReservingError(Exception):
    exit_code = 1


# ---------------------------------------------------------------------------
# Usage (exit 1)
# ---------------------------------------------------------------------------
class UsageError(ReservingError, ValueError):
    exit_code = 1


class HOutOfRange(UsageError):
    pass


class PiOutOfRange(UsageError):
    pass


class ZeroSpreadQuery(UsageError):
    pass


class EmptySequence(UsageError):
    pass


class InvalidEncoding(UsageError):
    pass


class RequiresMLEFit(UsageError):
    pass


class ConfigError(UsageError):
    pass


# ---------------------------------------------------------------------------
# Data validation (exit 2)
# ---------------------------------------------------------------------------
class DataError(ReservingError):
    exit_code = 2


class EmptyInput(DataError):
    pass


class NonNumericCell(DataError):
    pass


class NonPositivePayment(DataError):
    pass


class RaggedShape(DataError):
    pass


class NonPositiveLeftChannel(DataError):
    pass


class DegreesOfFreedomExhausted(DataError):
    pass


class NothingToPredict(DataError):
    pass


# ---------------------------------------------------------------------------
# Numerical failure (exit 3)
# ---------------------------------------------------------------------------
class NumericalError(ReservingError):
    exit_code = 3


class Singular(NumericalError):
    pass


class NotConverged(NumericalError):
    pass


class ZeroVariance(NumericalError):
    pass


class DegenerateVariance(NumericalError):
    pass
