"""Exception hierarchy shared across the package.

Solver outcomes that are ordinary results (infeasible / unbounded linear
programs) are reported through solution status fields, not exceptions.
Exceptions are reserved for bad inputs and genuine numerical failure.
"""


class VesshareError(Exception):
    """Base class for all package errors."""


class DimensionError(VesshareError):
    """Array lengths or matrix shapes do not match the model contract."""


class DomainError(VesshareError):
    """A numeric argument is outside its admissible domain."""


class ValidationError(VesshareError):
    """Configuration or input-file content failed validation."""


class ScenarioParseError(ValidationError):
    """A scenario CSV row could not be parsed; carries the line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class AmbiguousPriceError(VesshareError):
    """Price coincides with a threshold, where the optimal capacity is an
    interval rather than a point.  Carries the bracketing capacities."""

    def __init__(self, price, threshold, capacity_high, capacity_low):
        self.price = price
        self.threshold = threshold
        self.capacity_high = capacity_high
        self.capacity_low = capacity_low
        super().__init__(
            f"price {price!r} sits at threshold {threshold!r}; any capacity in "
            f"[{capacity_low!r}, {capacity_high!r}] is optimal there"
        )


class UnboundedCapacityError(VesshareError):
    """At price q == 0 the user may purchase arbitrarily large capacity."""


class NoViablePriceError(VesshareError):
    """No price gives the aggregator a nonnegative profit with actual sales."""


class SolverFailureError(VesshareError):
    """Iteration cap hit, certificate check failed, or an LP that must be
    feasible by construction came back infeasible."""
