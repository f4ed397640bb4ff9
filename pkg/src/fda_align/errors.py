"""Exception types shared across the package.

Everything raised on purpose derives from :class:`FdaAlignError`, so callers
(and the CLI) can distinguish domain failures from genuine bugs.
"""

from __future__ import annotations


class FdaAlignError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(FdaAlignError):
    """A vector or matrix has the wrong number of entries."""


class DegenerateProjection(FdaAlignError):
    """A point maps to (or numerically onto) the line at infinity."""


class SingularMatrix(FdaAlignError):
    """A homography cannot be inverted or renormalized."""


class OutOfBounds(FdaAlignError):
    """A point lies outside the search-space box it was declared to be in."""


class MaxDepthReached(FdaAlignError):
    """Attempted to split a hypersphere node at the maximum tree depth."""


class BudgetTooSmall(FdaAlignError):
    """The evaluation budget cannot cover a single root decomposition."""


class EmptyErrorList(FdaAlignError):
    """A percentile was requested over zero error values."""


class EmptyMatchSet(FdaAlignError):
    """A loss or run was requested over zero matched pairs / zero frames."""


class EmptyTrace(FdaAlignError):
    """A summary was requested for an empty optimization trace."""


class ConfigInvalid(FdaAlignError):
    """A configuration value violates its documented range or structure."""


class MatchesFormatError(FdaAlignError):
    """A matches CSV file is malformed.

    Carries the 1-based line number of the first offending line.
    """

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line
