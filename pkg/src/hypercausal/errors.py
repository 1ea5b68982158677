"""Exception types shared across the package.

Every failure mode raised here derives from :class:`HypercausalError`, so
callers can catch framework errors with one handler while still excepting
the builtin ``ValueError``/``KeyError``/``IndexError`` families where that
reads more naturally.
"""


class HypercausalError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(HypercausalError, ValueError):
    """Vector/matrix shapes disagree with the configured dimensions."""


class NonFiniteValue(HypercausalError, ValueError):
    """An input contains NaN or infinity where finite values are required."""


class InvalidConfig(HypercausalError, ValueError):
    """A configuration field is missing, unknown, or out of range."""


class DuplicateName(HypercausalError, ValueError):
    """A registry name is already taken."""


class UnknownName(HypercausalError, KeyError):
    """Lookup of a name that was never registered."""


class MissingHyperparam(HypercausalError, ValueError):
    """A required optimizer hyperparameter was not provided."""


class MissingRiskFunctional(HypercausalError, ValueError):
    """min-risk aggregation was requested without a risk functional."""


class CycleDetected(HypercausalError, ValueError):
    """The node graph contains a directed cycle.

    ``edge`` holds one offending (parent, child) pair when identifiable.
    """

    def __init__(self, message: str, edge: tuple[str, str] | None = None):
        super().__init__(message)
        self.edge = edge


class MissingSourceInput(HypercausalError, ValueError):
    """A source node (one without parents) has no explicit input."""


class InconsistentKeyLength(DimensionMismatch):
    """Bitstring keys in a counts table differ in length."""


class DegenerateLabels(HypercausalError, ValueError):
    """Binary labels are all zero or all one; ranking metrics are undefined."""


class NegativeTarget(HypercausalError, ValueError):
    """Cross-entropy targets must be nonnegative."""


class ZeroTarget(HypercausalError, ValueError):
    """MAPE is undefined when any target value is zero."""


class DegenerateBaseline(HypercausalError, ValueError):
    """The naive one-step baseline error is zero (constant targets)."""


class NonFiniteObjective(HypercausalError, ValueError):
    """An objective callback returned NaN or infinity."""


class IndexOutOfRange(HypercausalError, IndexError):
    """An epoch or trajectory index lies outside the valid range."""


class EmptyLabel(HypercausalError, ValueError):
    """Telemetry event labels must be nonempty."""


class MalformedLine(HypercausalError, ValueError):
    """A JSONL line could not be parsed.

    ``line_number`` is 1-based when known.
    """

    def __init__(self, message: str, line_number: int | None = None):
        super().__init__(message)
        self.line_number = line_number


class EmptyLogs(HypercausalError, ValueError):
    """A summary was requested over an empty run log."""
