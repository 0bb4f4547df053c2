"""Exception types shared across the package.

The CLI maps these onto exit codes: unsupported-operation errors exit with
code 2, every other :class:`DivisimError` with code 1.
"""


class DivisimError(Exception):
    """Base class for every error raised by this package."""


class DomainError(DivisimError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class UnsupportedTransform(DivisimError):
    """The log-Laplace transform cannot be evaluated for this distribution."""


class UnsupportedDensity(DivisimError):
    """The distribution has no (available) density."""


class UnsupportedQuantile(DivisimError):
    """The distribution has no closed-form quantile function."""


class UnsupportedCdf(DivisimError):
    """The distribution has no (available) cumulative distribution function."""


class NotParametricallyDivisible(DivisimError):
    """Pieces of this distribution do not stay in a known parametric family."""


class EmptySample(DivisimError):
    """An operation received a sample with no observations."""


class NonPositiveSample(DivisimError):
    """A fitter restricted to positive data received values <= 0."""


class DegenerateSample(DivisimError):
    """The sample carries no usable spread (e.g. all values equal)."""


class LengthMismatch(DivisimError):
    """Paired vectors have different lengths."""


class Infeasible(DivisimError):
    """No member of the target family attains the requested constraints."""


class GridTooSmall(DivisimError):
    """The transform grid has too few points for the number of parameters."""


class InsufficientData(DivisimError):
    """Too few observations to identify the requested number of parameters."""


class RecordError(DivisimError, ValueError):
    """A serialized record is malformed (unknown/missing fields, bad types)."""


class DimensionMismatch(DivisimError):
    """Model components have inconsistent dimensions."""


class RowSumViolation(DivisimError):
    """A weight-matrix row does not sum to one."""

    def __init__(self, row: int, total: float):
        self.row = row  # 1-based
        self.total = total
        super().__init__(f"RowSumViolation row {row} (sum={total:g})")
